"""Matrix-free one-step conditional-expectation operator of the weak-record chain.

Vectors are stored in tail-weighted coordinates ``u[l] = v[l] * q[l]``.  In
these coordinates

    (A v)(l) = (1/q[l]) * sum_{k>=l} v[k] p[k]

becomes the plain suffix sum ``sum_{k>=l} u[k] c[k]``, evaluated for every
``l`` in a single backward pass.

Indices ``k >= M`` are never stored.  Each vector carries a description of its
unstored tail (``growth_note``):

* :data:`ZERO` - the vector vanishes beyond the window (or the support ends);
* :class:`AffineTail` - ``v[k] = alpha + beta*k`` exactly; the image under A is
  again affine, computed from the pmf tail model;
* :class:`EnvelopeTail` - only a bound ``|u[k]| <= bound * profile(k)`` is
  known; the missing contribution is charged to a per-index error bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ImaginaryResidue, SummabilityFailure, WindowMismatch
from .pmf import DiscretePmf, FiniteTail, GammaPair, RationalTail, geometric_sum

__all__ = [
    "AffineTail",
    "EnvelopeTail",
    "RecursionReport",
    "TruncationWindow",
    "WeightedVector",
    "ZERO",
    "apply_A",
    "apply_B_poly",
    "apply_B_product",
    "bidiagonal_shift",
    "check_recursion",
    "check_recursion_eq5",
    "constant_vector",
    "default_window",
    "deviation_vector",
    "from_values",
    "identity_vector",
    "regression_vector",
    "roots_of_unity",
]


@dataclass(frozen=True)
class TruncationWindow:
    """Compute on indices ``< M``; results are certified on indices ``< L``."""

    M: int
    L: int
    tol: float = 1e-8

    def __post_init__(self):
        if not 1 <= self.L <= self.M:
            raise ValueError(f"need 1 <= L <= M, got L={self.L}, M={self.M}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def fit(self, d: DiscretePmf) -> TruncationWindow:
        """Clip the window to a finite support."""
        if d.is_finite and self.M > d.support + 1:
            M = d.support + 1
            return TruncationWindow(M, min(self.L, M), self.tol)
        return self

    def doubled(self) -> TruncationWindow:
        return TruncationWindow(2 * self.M, self.L, self.tol)


def default_window(d: DiscretePmf, M: int = 2000, L: int = 200, tol: float = 1e-8) -> TruncationWindow:
    return TruncationWindow(M, L, tol).fit(d)


@dataclass(frozen=True)
class _ZeroTail:
    def __repr__(self):
        return "ZERO"


ZERO = _ZeroTail()


@dataclass(frozen=True)
class AffineTail:
    alpha: complex
    beta: complex


@dataclass(frozen=True)
class EnvelopeTail:
    """Bound on the unstored weighted entries ``u[k]``, ``k >= M``.

    ``kind == "geometric"``: ``|u[k]| <= bound * rate**(k - M)`` with ``rate < 1``.
    ``kind == "power"``: ``|u[k]| <= bound * ((M + offset)/(k + offset))**rate``
    with ``rate > 0``.
    """

    bound: float
    rate: float
    kind: str = "geometric"
    offset: float = 0.0


Tail = Union[_ZeroTail, AffineTail, EnvelopeTail]


@dataclass(frozen=True, eq=False)
class WeightedVector:
    u: np.ndarray
    window: TruncationWindow
    growth_note: Tail = ZERO
    err: np.ndarray | None = None  # absolute error bound on each u[l]

    def __post_init__(self):
        if len(self.u) != self.window.M:
            raise WindowMismatch(f"vector length {len(self.u)} != window M={self.window.M}")

    @property
    def error(self) -> np.ndarray:
        return np.zeros(len(self.u)) if self.err is None else self.err

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.u)

    def values(self, d: DiscretePmf, n: int | None = None) -> np.ndarray:
        """Raw coordinates ``v[l] = u[l] / q[l]`` for ``l < n`` (default ``L``)."""
        n = self.window.L if n is None else n
        return self.u[:n] / d.window(self.window.M).q[:n]

    def certified_error(self, d: DiscretePmf) -> float:
        """Largest raw-coordinate error bound on the evaluation prefix."""
        if self.err is None:
            return 0.0
        L = self.window.L
        return float(np.max(self.err[:L] / d.window(self.window.M).q[:L]))

    def certified_weighted_error(self) -> float:
        """Largest weighted-coordinate error bound on the evaluation prefix."""
        if self.err is None:
            return 0.0
        return float(np.max(self.err[: self.window.L]))

    def norm(self, n: int | None = None) -> float:
        """Euclidean norm of the weighted entries on the prefix."""
        n = self.window.L if n is None else n
        return float(np.linalg.norm(self.u[:n]))

    def real(self) -> WeightedVector:
        tail = self.growth_note
        if isinstance(tail, AffineTail):
            tail = AffineTail(complex(tail.alpha).real, complex(tail.beta).real)
        return WeightedVector(self.u.real.copy(), self.window, tail, self.err)

    def conj(self) -> WeightedVector:
        tail = self.growth_note
        if isinstance(tail, AffineTail):
            tail = AffineTail(np.conj(tail.alpha), np.conj(tail.beta))
        return WeightedVector(np.conj(self.u), self.window, tail, self.err)

    def __add__(self, other: WeightedVector) -> WeightedVector:
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other: WeightedVector) -> WeightedVector:
        return combine(1.0, self, -1.0, other)

    def __mul__(self, a: complex) -> WeightedVector:
        return combine(a, self, 0.0, None)

    __rmul__ = __mul__


def _scale_tail(a: complex, tail: Tail) -> Tail:
    if isinstance(tail, AffineTail):
        return AffineTail(a * tail.alpha, a * tail.beta)
    if isinstance(tail, EnvelopeTail):
        return EnvelopeTail(abs(a) * tail.bound, tail.rate, tail.kind, tail.offset)
    return ZERO


def _add_tails(t1: Tail, t2: Tail) -> Tail:
    if t1 is ZERO:
        return t2
    if t2 is ZERO:
        return t1
    if isinstance(t1, AffineTail) and isinstance(t2, AffineTail):
        return AffineTail(t1.alpha + t2.alpha, t1.beta + t2.beta)
    if isinstance(t1, EnvelopeTail) and isinstance(t2, EnvelopeTail) and t1.kind == t2.kind:
        if t1.kind == "geometric":
            rate = max(t1.rate, t2.rate)
        else:
            if t1.offset != t2.offset:
                raise SummabilityFailure("power envelopes with different offsets")
            rate = min(t1.rate, t2.rate)
        return EnvelopeTail(t1.bound + t2.bound, rate, t1.kind, t1.offset)
    raise SummabilityFailure(f"cannot combine tails {t1!r} and {t2!r}")


def combine(a: complex, v: WeightedVector, b: complex, w: WeightedVector | None) -> WeightedVector:
    """``a*v + b*w`` including tails and error bounds."""
    if w is None or b == 0:
        err = None if v.err is None else abs(a) * v.err
        return WeightedVector(a * v.u, v.window, _scale_tail(a, v.growth_note), err)
    if v.window.M != w.window.M:
        raise WindowMismatch(f"window lengths differ: {v.window.M} vs {w.window.M}")
    tail = _add_tails(_scale_tail(a, v.growth_note), _scale_tail(b, w.growth_note))
    if v.err is None and w.err is None:
        err = None
    else:
        err = abs(a) * v.error + abs(b) * w.error
    return WeightedVector(a * v.u + b * w.u, v.window, tail, err)


def _suffix_sum(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x[::-1])[::-1]


def _image_tail(tail: Tail, d: DiscretePmf, M: int, c_end: float):
    """Return ``(contribution, error, new_tail)`` for the unstored part.

    ``contribution`` is the exact value of ``sum_{k>=M} u[k] c[k]`` when it is
    known in closed form; ``error`` bounds it otherwise.
    """
    model = d.tail_model
    if tail is ZERO or isinstance(model, FiniteTail) and M >= d.support + 1:
        return 0.0, 0.0, ZERO
    if isinstance(tail, AffineTail):
        if isinstance(model, FiniteTail):
            raise WindowMismatch("affine tail on a window shorter than the finite support")
        mu0, mu1 = model.excess_mean()
        new = AffineTail(tail.alpha + tail.beta * mu0, tail.beta * mu1)
        q_M = d.window(M).q_end
        return q_M * (new.alpha + new.beta * M), 0.0, new
    if isinstance(tail, EnvelopeTail):
        if tail.kind == "geometric":
            if not 0.0 <= tail.rate < 1.0:
                raise SummabilityFailure(f"weighted tail does not decay (rate {tail.rate:.6g} >= 1)")
            # hazards are nonincreasing beyond the window for every tail model
            bound = c_end * tail.bound / (1.0 - tail.rate)
            return 0.0, bound, EnvelopeTail(bound, tail.rate, "geometric")
        if not isinstance(model, RationalTail) or tail.offset != model.b:
            raise SummabilityFailure("power envelope needs the matching polynomial tail model")
        if not tail.rate > 0.0:
            raise SummabilityFailure(f"weighted tail does not decay (power {tail.rate:.6g} <= 0)")
        bound = tail.bound * model.kappa * (1.0 / (M + model.b) + 1.0 / tail.rate)
        return 0.0, bound, EnvelopeTail(bound, tail.rate, "power", model.b)
    raise TypeError(f"unknown tail {tail!r}")


def apply_A(v: WeightedVector, d: DiscretePmf) -> WeightedVector:
    """Apply the conditional-expectation operator in weighted coordinates.

    ``(Av)_w[l] = sum_{k>=l} u[k] c[k]``, one backward pass over the window;
    the unstored tail is either added exactly or charged to the error bound.
    """
    M = v.window.M
    win = d.window(M)
    if len(win.c) != M:
        raise WindowMismatch(f"window M={M} exceeds the support of {d!r}")
    if not np.all(np.isfinite(v.u)):
        raise SummabilityFailure("non-finite weighted entries")
    c_end = d.hazard_at(M) if not d.is_finite or M <= d.support else 0.0
    extra, bound, tail = _image_tail(v.growth_note, d, M, c_end)
    out = _suffix_sum(v.u * win.c) + extra
    if v.err is None and bound == 0.0:
        err = None
    else:
        err = _suffix_sum(v.error * win.c) + bound
    return WeightedVector(out, v.window, tail, err)


# -- standard vectors -------------------------------------------------------


def from_values(d: DiscretePmf, window: TruncationWindow, values, tail: Tail = ZERO) -> WeightedVector:
    q = d.window(window.M).q
    return WeightedVector(np.asarray(values) * q, window, tail)


def constant_vector(d: DiscretePmf, window: TruncationWindow, value: float = 1.0) -> WeightedVector:
    tail = ZERO if d.is_finite else AffineTail(value, 0.0)
    return from_values(d, window, np.full(window.M, value), tail)


def identity_vector(d: DiscretePmf, window: TruncationWindow) -> WeightedVector:
    tail = ZERO if d.is_finite else AffineTail(0.0, 1.0)
    return from_values(d, window, np.arange(window.M, dtype=float), tail)


def regression_vector(d: DiscretePmf, m: int, window: TruncationWindow | None = None) -> WeightedVector:
    """``e_m(l) = E(W_{i+m} | W_i = l)`` via ``e_1 = A id`` and ``e_{k+1} = A e_k``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    window = (window or default_window(d)).fit(d)
    e = identity_vector(d, window)
    for _ in range(m):
        e = apply_A(e, d)
    return e


def _affine_part(d: DiscretePmf, window: TruncationWindow, g: GammaPair, m: int) -> WeightedVector:
    c0, c1 = g.gamma0 * geometric_sum(g.gamma1, m), g.gamma1**m
    k = np.arange(window.M, dtype=float)
    tail = ZERO if d.is_finite else AffineTail(c0, c1)
    return from_values(d, window, c0 + c1 * k, tail)


def deviation_vector(
    d: DiscretePmf, g: GammaPair, m: int, window: TruncationWindow | None = None
) -> WeightedVector:
    """``d_m = e_m - g0*(1 + g1 + ... + g1**(m-1)) - g1**m * id``; ``d_0 = 0``."""
    window = (window or default_window(d)).fit(d)
    return regression_vector(d, m, window) - _affine_part(d, window, g, m)


# -- reduction operators ----------------------------------------------------


def roots_of_unity(s: int) -> np.ndarray:
    """``exp(2*pi*i*k/s)`` for ``k = 1..s-1``, exactly conjugate-closed."""
    from .errors import InvalidS

    if s < 2:
        raise InvalidS(f"need s >= 2, got {s}")
    k = np.arange(1, s)
    lam = np.exp(2j * np.pi * k / s)
    for i in range((s - 1) // 2):
        lam[s - 2 - i] = np.conj(lam[i])
    if s % 2 == 0:
        lam[s // 2 - 1] = -1.0
    return lam


def apply_B_poly(s: int, gamma1: float, v: WeightedVector, d: DiscretePmf) -> WeightedVector:
    """``B_s v = sum_{k<s} gamma1**(s-1-k) A^k v`` by Horner, ``s-1`` applications of A."""
    if s < 1:
        raise ValueError("s must be >= 1")
    w = v
    for i in range(1, s):
        w = combine(1.0, apply_A(w, d), gamma1**i, v)
    return w


def apply_B_product(
    s: int, gamma1: float, v: WeightedVector, d: DiscretePmf, *, warn: bool = True
) -> WeightedVector:
    """``B_s v = prod_{k=1}^{s-1} (A - gamma1*lambda_k) v`` in complex arithmetic.

    For real input the conjugate factors cancel; the result is returned real
    and an :class:`ImaginaryResidue` warning is issued if the discarded
    imaginary part exceeds the window tolerance (relative to ``v``).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if s == 1:
        return v
    real_input = not v.is_complex and not _complex_tail(v.growth_note)
    w = combine(1.0 + 0j, v, 0.0, None)
    for lam in roots_of_unity(s):
        w = combine(1.0, apply_A(w, d), -gamma1 * lam, w)
    if not real_input:
        return w
    L = v.window.L
    scale = max(float(np.max(np.abs(v.u[:L]))), np.finfo(float).tiny)
    residue = float(np.max(np.abs(w.u[:L].imag))) / scale
    if warn and residue > v.window.tol:
        warnings.warn(f"imaginary residue {residue:.3e} after product form", ImaginaryResidue, stacklevel=2)
    return w.real()


def _complex_tail(tail: Tail) -> bool:
    return isinstance(tail, AffineTail) and (
        np.iscomplexobj(tail.alpha) or np.iscomplexobj(tail.beta)
    )


@dataclass(frozen=True)
class RecursionReport:
    s: int
    residual: float  # max |d_{m+1} - g1^m d_1 - A d_m| on the prefix
    poly_gap: float  # max |d_m - B_m d_1| (Horner)
    product_gap: float  # max |d_m - B_m d_1| (product form)


def check_recursion(
    d: DiscretePmf, g: GammaPair, s: int, window: TruncationWindow | None = None
) -> RecursionReport:
    """Check ``d_{m+1} = g1^m d_1 + A d_m`` and ``d_m = B_m d_1`` for ``m < s``."""
    window = (window or default_window(d)).fit(d)
    if s <= 1:
        return RecursionReport(s, 0.0, 0.0, 0.0)
    devs = [deviation_vector(d, g, m, window) for m in range(1, s + 1)]
    d1 = devs[0]
    res = poly = prod = 0.0
    for m in range(1, s):
        lhs = devs[m]
        rhs = combine(g.gamma1**m, d1, 1.0, apply_A(devs[m - 1], d))
        res = max(res, _max_raw(lhs - rhs, d))
    for m in range(1, s + 1):
        poly = max(poly, _max_raw(devs[m - 1] - apply_B_poly(m, g.gamma1, d1, d), d))
        prod = max(prod, _max_raw(devs[m - 1] - apply_B_product(m, g.gamma1, d1, d, warn=False), d))
    return RecursionReport(s, res, poly, prod)


check_recursion_eq5 = check_recursion


def _max_raw(v: WeightedVector, d: DiscretePmf) -> float:
    return float(np.max(np.abs(v.values(d))))


def bidiagonal_shift(v: np.ndarray) -> np.ndarray:
    """Rows ``0..n-2`` of the infinite matrix with ones on the diagonal and superdiagonal.

    Triangular with a nonzero diagonal yet not injective: it annihilates
    ``(1, -1, 1, -1, ...)``.
    """
    v = np.asarray(v)
    return v[:-1] + v[1:]
