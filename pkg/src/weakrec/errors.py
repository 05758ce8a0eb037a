"""Exception and warning classes raised by :mod:`weakrec`."""


class WeakRecordError(Exception):
    """Base class for all library errors."""


class InvalidGamma(WeakRecordError, ValueError):
    pass


class NonIntegerSupport(WeakRecordError, ValueError):
    pass


class NotNormalized(WeakRecordError, ValueError):
    pass


class NegativeMass(WeakRecordError, ValueError):
    pass


class InvalidCoeffs(WeakRecordError, ValueError):
    pass


class InvalidS(WeakRecordError, ValueError):
    pass


class WindowMismatch(WeakRecordError, ValueError):
    pass


class SummabilityFailure(WeakRecordError, ArithmeticError):
    """The weighted mass of a vector is not certifiably summable."""


class PoleOnPath(WeakRecordError, ArithmeticError):
    """Some factor 1 - c_k/lambda vanishes exactly."""


class NotEigen(WeakRecordError):
    pass


class KernelResidualTooLarge(WeakRecordError, ArithmeticError):
    pass


class StreamBudgetExceeded(WeakRecordError, RuntimeError):
    pass


class DegenerateDesign(WeakRecordError, ValueError):
    pass


class ImaginaryResidue(UserWarning):
    """A product of conjugate factors left a non-negligible imaginary part."""
