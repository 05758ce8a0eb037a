"""Parent distributions on {0, 1, 2, ...} and the linear-regression families.

A :class:`DiscretePmf` stores a prefix of the probabilities ``p``, the tails
``q[k] = P(X >= k)`` and the hazards ``c[k] = p[k] / q[k]``.  Infinite laws
carry a closed-form ``tail_model`` so that any window beyond the stored
prefix can be generated on demand.

The three families with linear adjacent regression
``E(W_{i+1} | W_i = j) = g0 + g1*j`` are produced by :func:`from_gamma` from
the tail recursion

    q[j+1] * (g0 + g1 - (1-g1)*j) = q[j] * (g0 - (1-g1)*j),

whose solution depends on the slope::

    g1 < 1    finite support {0..g0/(1-g1)}
    g1 == 1   geometric
    g1 > 1    polynomial tail q[j] ~ j**(-g1/(g1-1))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .errors import (
    InvalidCoeffs,
    InvalidGamma,
    NegativeMass,
    NonIntegerSupport,
    NotNormalized,
)

__all__ = [
    "DiscretePmf",
    "FiniteTail",
    "GammaPair",
    "GeometricTail",
    "MembershipReport",
    "PmfWindow",
    "RationalTail",
    "RegressionCoeffs",
    "beta_to_gamma",
    "check_moment_membership",
    "from_gamma",
    "from_raw",
    "gamma_to_beta",
    "geometric",
    "geometric_sum",
    "parse_dist",
]

DEFAULT_TAIL_MASS = 1e-12
MAX_STORED = 2_000_000
INTEGRALITY_TOL = 1e-9


def geometric_sum(x: float, n: int) -> float:
    """Return ``sum_{k<n} x**k``; regular at ``x == 1``."""
    if n <= 0:
        return 0.0
    return math.fsum(x**k for k in range(n))


@dataclass(frozen=True)
class GammaPair:
    gamma0: float
    gamma1: float

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma1 > 0):
            raise InvalidGamma(f"gamma0 and gamma1 must be positive, got {self.gamma0}, {self.gamma1}")

    def line(self, m: int) -> tuple[float, float]:
        """Intercept and slope of ``e_m`` for a law in this family."""
        return self.gamma0 * geometric_sum(self.gamma1, m), self.gamma1**m


@dataclass(frozen=True)
class RegressionCoeffs:
    beta0: float
    beta1: float
    s: int

    def __post_init__(self):
        if self.s < 1:
            raise InvalidCoeffs(f"gap s must be >= 1, got {self.s}")
        if not (self.beta0 > 0 and self.beta1 > 0):
            raise InvalidCoeffs(f"beta0 and beta1 must be positive, got {self.beta0}, {self.beta1}")


def beta_to_gamma(b: RegressionCoeffs) -> GammaPair:
    gamma1 = b.beta1 ** (1.0 / b.s)
    return GammaPair(b.beta0 / geometric_sum(gamma1, b.s), gamma1)


def gamma_to_beta(g: GammaPair, s: int) -> RegressionCoeffs:
    if s < 1:
        raise InvalidCoeffs(f"gap s must be >= 1, got {s}")
    beta0, beta1 = g.line(s)
    return RegressionCoeffs(beta0, beta1, s)


# -- tail models ------------------------------------------------------------


@dataclass(frozen=True)
class FiniteTail:
    N: int


@dataclass(frozen=True)
class GeometricTail:
    """``q[k+1] = ratio * q[k]`` for every ``k``; constant hazard ``1 - ratio``."""

    ratio: float

    @property
    def theta(self) -> float:
        return 1.0 - self.ratio

    def hazard(self, k: np.ndarray) -> np.ndarray:
        return np.full(np.shape(k), self.theta)

    def step(self, k: np.ndarray) -> np.ndarray:
        return np.full(np.shape(k), self.ratio)

    def excess_mean(self) -> tuple[float, float]:
        # E(X | X >= l) = l + r/(1-r)
        return self.ratio / (1.0 - self.ratio), 1.0


@dataclass(frozen=True)
class RationalTail:
    """``q[k+1] / q[k] = (k + a) / (k + b)`` with ``b - a > 1``.

    The hazard is ``(b - a) / (k + b)`` and ``q[k]`` decays like
    ``k**-(b - a)``.
    """

    a: float
    b: float

    @property
    def kappa(self) -> float:
        return self.b - self.a

    def hazard(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self.kappa / (k + self.b)

    def step(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return (k + self.a) / (k + self.b)

    def excess_mean(self) -> tuple[float, float]:
        # sum_{k>=l} Gamma(k+a)/Gamma(k+b) telescopes, giving
        # E(X | X >= l) = l + (l + a)/(b - a - 1)
        d = self.kappa - 1.0
        return self.a / d, 1.0 + 1.0 / d

    def log_q_ratio(self, k0: np.ndarray, k: np.ndarray) -> np.ndarray:
        """``log(q[k] / q[k0])`` from the gamma-function closed form."""
        from scipy.special import gammaln

        k0 = np.asarray(k0, dtype=float)
        k = np.asarray(k, dtype=float)
        return gammaln(k + self.a) - gammaln(k0 + self.a) - gammaln(k + self.b) + gammaln(k0 + self.b)


TailModel = Union[FiniteTail, GeometricTail, RationalTail]


class PmfWindow(NamedTuple):
    p: np.ndarray
    q: np.ndarray
    c: np.ndarray
    q_end: float  # q[M], mass at or beyond the window


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    p: np.ndarray
    q: np.ndarray
    c: np.ndarray
    support: int | None  # N for a finite support {0..N}, None if infinite
    family: str  # "gamma" or "raw"
    tail_model: TailModel
    gamma: GammaPair | None = None
    q_end: float = 0.0  # tail mass just beyond the stored prefix
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("p", "q", "c"):
            getattr(self, name).setflags(write=False)

    @property
    def is_finite(self) -> bool:
        return self.support is not None

    @property
    def n_stored(self) -> int:
        return len(self.p)

    def __repr__(self) -> str:
        return f"DiscretePmf({self.label or self.family}, stored={self.n_stored}, support={self.support})"

    def window(self, M: int) -> PmfWindow:
        """Arrays for indices ``0..M-1``, extended from ``tail_model`` if needed."""
        if M < 1:
            raise ValueError("window length must be positive")
        if self.is_finite:
            M = min(M, self.support + 1)
        if M <= self.n_stored:
            q_end = self.q[M] if M < self.n_stored else self.q_end
            return PmfWindow(self.p[:M], self.q[:M], self.c[:M], float(q_end))
        key = ("win", M)
        if key not in self._cache:
            self._cache.clear()
            self._cache[key] = self._extend(M)
        return self._cache[key]

    def _extend(self, M: int) -> PmfWindow:
        n = self.n_stored
        k = np.arange(n, M)
        step = self.tail_model.step(k).astype(np.longdouble)
        q_ext = np.longdouble(self.q_end) * np.concatenate(([1.0], np.cumprod(step)))
        c_ext = self.tail_model.hazard(k)
        q_new = q_ext[:-1].astype(float)
        q = np.concatenate((self.q, q_new))
        c = np.concatenate((self.c, c_ext))
        p = np.concatenate((self.p, c_ext * q_new))
        return PmfWindow(p, q, c, float(q_ext[-1]))

    def hazard_at(self, k: int) -> float:
        if k < self.n_stored:
            return float(self.c[k])
        if self.is_finite:
            raise IndexError(f"index {k} outside support")
        return float(self.tail_model.hazard(np.array([k]))[0])


def _finite_pmf(p, q, c, family, gamma=None, label=""):
    N = len(p) - 1
    return DiscretePmf(
        p=np.asarray(p, dtype=float),
        q=np.asarray(q, dtype=float),
        c=np.asarray(c, dtype=float),
        support=N,
        family=family,
        tail_model=FiniteTail(N),
        gamma=gamma,
        q_end=0.0,
        label=label,
    )


def geometric(theta: float, tail_mass_target: float = DEFAULT_TAIL_MASS) -> DiscretePmf:
    """``p[k] = theta * (1 - theta)**k`` on ``{0, 1, ...}``."""
    if not 0.0 < theta < 1.0:
        raise InvalidGamma(f"geometric parameter must lie in (0, 1), got {theta}")
    r = 1.0 - theta
    M = max(1, math.ceil(math.log(tail_mass_target) / math.log(r)))
    while r**M >= tail_mass_target:
        M += 1
    while M > 1 and r ** (M - 1) < tail_mass_target:
        M -= 1
    q = r ** np.arange(M + 1, dtype=float)
    return DiscretePmf(
        p=theta * q[:-1],
        q=q[:-1],
        c=np.full(M, theta),
        support=None,
        family="gamma",
        tail_model=GeometricTail(r),
        gamma=GammaPair(r / theta, 1.0),
        q_end=float(q[-1]),
        label=f"geo({theta:g})",
    )


def from_gamma(
    g: GammaPair,
    tail_mass_target: float = DEFAULT_TAIL_MASS,
    max_stored: int = MAX_STORED,
) -> DiscretePmf:
    """Law whose adjacent weak-record regression is ``g.gamma0 + g.gamma1 * j``.

    Parameters
    ----------
    g : GammaPair
        Intercept and slope of the adjacent regression.
    tail_mass_target : float
        For infinite supports the stored prefix is the shortest one whose
        remaining tail mass drops below this value (capped at ``max_stored``
        entries; the ``tail_model`` continues the law exactly).

    Raises
    ------
    NonIntegerSupport
        If ``gamma1 < 1`` and ``gamma0 / (1 - gamma1)`` is not an integer.
    """
    if not 0.0 < tail_mass_target < 1.0:
        raise ValueError("tail_mass_target must lie in (0, 1)")
    g0, g1 = g.gamma0, g.gamma1
    label = f"gamma({g0:g},{g1:g})"
    if g1 == 1.0:
        pmf = geometric(1.0 / (1.0 + g0), tail_mass_target)
        return DiscretePmf(
            pmf.p, pmf.q, pmf.c, None, "gamma", pmf.tail_model, g, pmf.q_end, label
        )
    if g1 < 1.0:
        ratio = g0 / (1.0 - g1)
        N = round(ratio)
        if abs(ratio - N) > INTEGRALITY_TOL or N < 1:
            raise NonIntegerSupport(f"gamma0/(1-gamma1) = {ratio!r} is not a positive integer")
        j = np.arange(N + 1, dtype=float)
        num = g0 - (1.0 - g1) * j
        den = g0 + g1 - (1.0 - g1) * j
        c = g1 / den
        c[N] = 1.0
        step = np.clip(num / den, 0.0, None).astype(np.longdouble)
        q = np.concatenate(([1.0], np.cumprod(step[:-1]))).astype(float)
        return _finite_pmf(c * q, q, c, "gamma", g, label)

    delta = g1 - 1.0
    tail = RationalTail(g0 / delta, (g0 + g1) / delta)
    qs, cs = [], []
    q_last = np.longdouble(1.0)
    start, chunk = 0, 4096
    n = 0
    while True:
        j = np.arange(start, start + chunk, dtype=float)
        den = g0 + g1 + delta * j
        c = g1 / den
        step = ((g0 + delta * j) / den).astype(np.longdouble)
        q = q_last * np.concatenate(([1.0], np.cumprod(step)))
        hit = np.nonzero(q[1:] < tail_mass_target)[0]
        if hit.size or start + chunk >= max_stored:
            stop = min(hit[0] + 1 if hit.size else chunk, max_stored - start)
            qs.append(q[:stop])
            cs.append(c[:stop])
            q_end = float(q[stop])
            n = start + stop
            break
        qs.append(q[:-1])
        cs.append(c)
        q_last = q[-1]
        start += chunk
        chunk *= 2
    q = np.concatenate(qs).astype(float)
    c = np.concatenate(cs)
    assert len(q) == n
    return DiscretePmf(c * q, q, c, None, "gamma", tail, g, q_end, label)


def from_raw(p, label: str = "") -> DiscretePmf:
    """Finite law from explicit probabilities ``p[0], p[1], ...``."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise NotNormalized("empty probability vector")
    if np.any(p < 0):
        raise NegativeMass(f"negative probability at index {int(np.argmax(p < 0))}")
    total = math.fsum(p)
    if abs(total - 1.0) > 1e-9:
        raise NotNormalized(f"probabilities sum to {total!r}")
    last = int(np.nonzero(p)[0][-1])
    p = p[: last + 1] / total
    q = np.cumsum(p[::-1])[::-1]
    # rescale so q[0] == 1 exactly without disturbing q[k+1] = q[k] - p[k]
    q = q / q[0]
    p = np.append(-np.diff(q), q[-1])
    c = p / q
    c[-1] = 1.0
    return _finite_pmf(p, q, c, "raw", None, label or "raw")


# -- moments ----------------------------------------------------------------


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    s: int
    partial_mean: float  # sum of k*p[k] over the stored prefix
    mean: float  # completed analytically from the tail model
    certificate: str


def check_moment_membership(d: DiscretePmf, s: int) -> MembershipReport:
    """Certify that ``E(W_{i+s} | W_i)`` is finite for the law ``d``."""
    k = np.arange(d.n_stored, dtype=float)
    partial = math.fsum(k * d.p)
    tail = d.tail_model
    if isinstance(tail, FiniteTail):
        return MembershipReport(True, s, partial, partial, "finite support")
    mu0, mu1 = tail.excess_mean()
    n = d.n_stored
    mean = partial + d.q_end * (mu0 + mu1 * n)
    if isinstance(tail, GeometricTail):
        cert = "geometric tail: all moments finite"
    else:
        cert = (
            f"polynomial tail q_j ~ j^-{tail.kappa:.6g} with exponent > 1: "
            "finite mean and affine conditional means at every gap"
        )
    return MembershipReport(True, s, partial, mean, cert)


# -- distribution spec strings ----------------------------------------------


def parse_dist(spec: str) -> DiscretePmf:
    """Parse ``geo:<theta>``, ``gamma:<g0>,<g1>`` or ``raw:<p0>,<p1>,...``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        values = [float(v) for v in rest.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"bad distribution spec {spec!r}") from exc
    if kind == "geo" and len(values) == 1:
        return geometric(values[0])
    if kind == "gamma" and len(values) == 2:
        return from_gamma(GammaPair(*values))
    if kind == "raw" and values:
        return from_raw(values, label=spec)
    raise ValueError(f"bad distribution spec {spec!r}")
