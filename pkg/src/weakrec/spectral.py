"""Eigenvalues of A on the circle |lambda| = gamma1 and injectivity of B_s.

For ``A x = lambda x`` the eigen-equations telescope to the recursion
``x[i+1] = x[i] * (lambda q[i] - p[i]) / (lambda q[i+1])``, i.e. in weighted
coordinates ``u[i+1] = u[i] * (1 - c[i]/lambda)`` with ``u[0] = 1``.  Such an
``x`` is an eigenvector iff

    S*_n = sum_{k=1}^n c[k] |u[k]| stays bounded, and
    S_n  = (p0 - lambda) * prod_{k=1}^n (1 - c[k]/lambda) -> 0.

For ``lambda = gamma1 * exp(2*pi*i/s)`` the squared modulus of each factor is

    a[k] = 1 - 2 (c[k]/gamma1) cos(2 pi/s) + (c[k]/gamma1)**2,

which exceeds 1 for s = 2, 3, 4.  ``B_s`` fails to be injective exactly when
one of ``gamma1 * lambda_l`` is an eigenvalue, and ``l = 1`` minimises every
``a[k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidS, KernelResidualTooLarge, NotEigen, PoleOnPath
from .operator import (
    ZERO,
    EnvelopeTail,
    TruncationWindow,
    WeightedVector,
    apply_A,
    apply_B_product,
    combine,
    roots_of_unity,
)
from .pmf import DiscretePmf, FiniteTail, GeometricTail, RationalTail

__all__ = [
    "ComplexSeq",
    "Kernel",
    "SpectralVerdict",
    "a_factor",
    "a_factors",
    "classify_injectivity",
    "eigen_test",
    "eigenvector",
    "kernel_residual",
    "kernel_vector",
    "partial_sums",
    "roots_of_unity",
]

PRODUCT_THRESHOLD = -60.0  # log-product level taken as "-> 0" on a window
BOUNDARY_RTOL = 1e-12


def spectral_window(d: DiscretePmf, M: int = 2000, L: int = 200, tol: float = 1e-6) -> TruncationWindow:
    return TruncationWindow(M, L, tol).fit(d)


def a_factors(c: np.ndarray, s: int, gamma1: float, ell: int = 1) -> np.ndarray:
    x = np.asarray(c, dtype=float) / gamma1
    return 1.0 - 2.0 * x * math.cos(2.0 * math.pi * ell / s) + x * x


def a_factor(k: int, s: int, gamma1: float, d: DiscretePmf, ell: int = 1) -> float:
    return float(a_factors(np.array([d.hazard_at(k)]), s, gamma1, ell)[0])


@dataclass(frozen=True, eq=False)
class SpectralVerdict:
    lam: complex
    ell: int | None
    a_factors: np.ndarray  # |1 - c_k/lambda|^2, k = 0..M-1
    log_product: np.ndarray  # sum_{k=1}^n log a_k, n = 1..M-1
    sstar_partials: np.ndarray  # S*_n, n = 1..M-1 (inf once it overflows)
    s_partials: np.ndarray  # |S_n|, n = 0..M-1
    is_eigen: str  # "yes" | "no" | "inconclusive"
    injective: str | None
    rationale: str
    ell_minima: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "ell": self.ell,
            "is_eigen": self.is_eigen,
            "injective": self.injective,
            "a_min": float(np.min(self.a_factors[1:])) if len(self.a_factors) > 1 else float("nan"),
            "a_max": float(np.max(self.a_factors[1:])) if len(self.a_factors) > 1 else float("nan"),
            "log_product_end": float(self.log_product[-1]) if len(self.log_product) else 0.0,
            "sstar_end": float(self.sstar_partials[-1]) if len(self.sstar_partials) else 0.0,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class _Traces:
    ratio: np.ndarray  # 1 - c_k/lambda
    log_a: np.ndarray
    log_product: np.ndarray
    log_terms: np.ndarray  # log(c_k |u_k|), k = 1..M-1
    log_sstar: np.ndarray
    log_s: np.ndarray


def _traces(lam: complex, d: DiscretePmf, M: int) -> _Traces:
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    win = d.window(M)
    ratio = 1.0 - win.c / lam
    zero = np.nonzero(ratio == 0)[0]
    if zero.size:
        raise PoleOnPath(f"factor 1 - c_k/lambda vanishes at k={int(zero[0])}")
    with np.errstate(divide="ignore"):
        log_a = 2.0 * np.log(np.abs(ratio))
        log_c = np.log(win.c)
    log_product = np.cumsum(log_a[1:])
    log_u = np.concatenate(([0.0], np.cumsum(0.5 * log_a[:-1])))
    log_terms = log_c[1:] + log_u[1:]
    log_sstar = np.logaddexp.accumulate(log_terms) if len(log_terms) else log_terms
    log_s0 = math.log(abs(win.p[0] - lam * win.q[0]))
    log_s = log_s0 + np.concatenate(([0.0], 0.5 * log_product))
    return _Traces(ratio, log_a, log_product, log_terms, log_sstar, log_s)


def _analytic(lam: complex, d: DiscretePmf, M: int):
    """Closed-form decision from the tail model; ``None`` when unavailable."""
    model = d.tail_model
    if isinstance(model, FiniteTail):
        return (
            "no",
            "finite support: A is a finite triangular matrix whose eigenvalues are the hazards c_k",
        )
    if isinstance(model, GeometricTail):
        theta = model.theta
        if not np.allclose(d.window(M).c, theta, rtol=1e-12, atol=0.0):
            return None
        # |1 - theta/lambda|^2 < 1  <=>  theta < 2 Re(lambda)
        edge = 2.0 * lam.real
        a_lim = abs(1.0 - theta / lam) ** 2
        if abs(theta - edge) <= BOUNDARY_RTOL * max(theta, abs(edge)):
            return "no", f"boundary a = 1 (c = 2 Re lambda = {theta:.6g}): |S_n| stays at |p0 - lambda| > 0"
        if theta < edge:
            return (
                "yes",
                f"constant hazard {theta:.6g}: a = {a_lim:.6f} < 1, product -> 0 and "
                f"S* is geometric with ratio sqrt(a) = {math.sqrt(a_lim):.6f}",
            )
        return "no", f"constant hazard {theta:.6g}: a = {a_lim:.6f} >= 1, |S_n| does not vanish"
    if isinstance(model, RationalTail):
        # c_k = kappa/(k+b): log a_k ~ -2 Re(1/lambda) kappa/k, so prod a_k behaves like
        # n^(-2 eps) and the S* terms like k^(-1-eps), eps = kappa Re(1/lambda)
        eps = model.kappa * (1.0 / lam).real
        if abs(lam.real) <= BOUNDARY_RTOL * abs(lam):
            return "no", "hazards c_k -> 0 with Re(1/lambda) = 0: product converges to a nonzero limit"
        if eps > 0:
            return (
                "yes",
                f"hazards c_k = {model.kappa:.6g}/(k+{model.b:.6g}): |S_n| ~ n^-{eps:.4g} -> 0 "
                f"and S* terms are O(k^-{1 + eps:.4g})",
            )
        return "no", f"hazards c_k -> 0 with Re(1/lambda) < 0: |S_n| grows like n^{-eps:.4g}"
    return None


def _numeric(tr: _Traces):
    n = len(tr.log_product)
    if n < 4:
        return "inconclusive", "window too short for a trend"
    half = n // 2
    tail_log_a = tr.log_a[1:][half:]
    to_zero = tr.log_product[-1] < PRODUCT_THRESHOLD and bool(np.all(tail_log_a < 0))
    not_zero = bool(np.all(tail_log_a >= 0))
    steps = np.diff(tr.log_terms[half:])
    sstar_bounded = False
    if steps.size and np.all(np.isfinite(steps)) and steps.max() < 0:
        rho = math.exp(steps.max())
        rest = tr.log_terms[-1] + math.log(rho / (1.0 - rho))
        sstar_bounded = rest - tr.log_sstar[-1] < math.log(1e-6)
    if to_zero and sstar_bounded:
        return "yes", f"numeric: log product {tr.log_product[-1]:.1f} < {PRODUCT_THRESHOLD:.0f} and S* terms decay geometrically"
    if not_zero:
        return "no", "numeric: factors a_k >= 1 over the last half of the window, |S_n| does not vanish"
    return "inconclusive", (
        f"numeric: log product {tr.log_product[-1]:.1f}, S* bounded trend {sstar_bounded}; thresholds not crossed"
    )


def eigen_test(
    lam: complex,
    d: DiscretePmf,
    window: TruncationWindow | None = None,
    *,
    ell: int | None = None,
    analytic: bool = True,
) -> SpectralVerdict:
    """Decide whether ``lam`` is an eigenvalue of A on its domain.

    The partial products and sums are always recorded on the window; when the
    tail model gives a closed-form answer it overrides the numeric trend.
    """
    lam = complex(lam)
    window = (window or spectral_window(d)).fit(d)
    tr = _traces(lam, d, window.M)
    decision = _analytic(lam, d, window.M) if analytic else None
    if decision is None:
        decision = _numeric(tr)
    with np.errstate(over="ignore"):
        sstar = np.exp(tr.log_sstar)
        s_abs = np.exp(tr.log_s)
    return SpectralVerdict(
        lam=lam,
        ell=ell,
        a_factors=np.exp(tr.log_a),
        log_product=tr.log_product,
        sstar_partials=sstar,
        s_partials=s_abs,
        is_eigen=decision[0],
        injective=None,
        rationale=decision[1],
    )


def partial_sums(lam: complex, d: DiscretePmf, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``S_0..S_n`` by direct summation and by the product representation.

    The direct route multiplies out ``b_k = prod_{i<k} (lam q_i - p_i)/(lam q_{i+1})``
    in raw coordinates; the product route uses only the hazards.
    """
    lam = complex(lam)
    win = d.window(n + 2)
    p, q, c = win.p, win.q, win.c
    n = min(n, len(p) - 1)
    head = p[0] - lam * q[0]
    b = np.cumprod((lam * q[:n] - p[:n]) / (lam * q[1 : n + 1]))
    direct = head + np.concatenate(([0.0], np.cumsum(b * p[1 : n + 1])))
    product = head * np.concatenate(([1.0], np.cumprod(1.0 - c[1 : n + 1] / lam)))
    return direct, product


@dataclass(frozen=True, eq=False)
class ComplexSeq:
    """Candidate eigenvector, weighted coordinates ``u[k] = x[k] q[k]``, ``x[0] = 1``."""

    u: np.ndarray
    lam: complex
    window: TruncationWindow
    log_scale: np.ndarray  # log|u[k]|, exact even where u underflows
    tail: object
    formal: bool  # True when the weighted entries do not decay

    def vector(self) -> WeightedVector:
        return WeightedVector(self.u, self.window, self.tail)

    def values(self, d: DiscretePmf, n: int | None = None) -> np.ndarray:
        return self.vector().values(d, n)

    def residual(self, d: DiscretePmf) -> float:
        """Weighted ``||A x - lambda x|| / ||x||`` on the evaluation prefix."""
        v = self.vector()
        r = combine(1.0, apply_A(v, d), -self.lam, v)
        return r.norm() / v.norm()


def _envelope(lam: complex, d: DiscretePmf, M: int, u_M: complex):
    model = d.tail_model
    if isinstance(model, FiniteTail) and M >= model.N + 1:
        return ZERO
    if isinstance(model, RationalTail):
        eps = model.kappa * (1.0 / lam).real
        if eps > 0:
            boost = math.exp(model.kappa**2 / (2.0 * abs(lam) ** 2 * (M + model.b - 1.0)))
            return EnvelopeTail(abs(u_M) * boost, eps, "power", model.b)
        return EnvelopeTail(abs(u_M), 1.0, "geometric")
    # constant hazard beyond the window
    rate = abs(1.0 - d.hazard_at(M) / lam)
    return EnvelopeTail(abs(u_M), rate, "geometric")


def eigenvector(
    lam: complex,
    d: DiscretePmf,
    window: TruncationWindow | None = None,
    *,
    enlarge: bool = True,
    max_M: int = 1 << 16,
) -> ComplexSeq:
    """Solve the eigen-recursion from ``x[0] = 1`` on the window.

    With ``enlarge`` the window is doubled while the geometric tail envelope
    of the weighted entries exceeds ``window.tol``.
    """
    lam = complex(lam)
    window = (window or spectral_window(d)).fit(d)
    while True:
        x = _eigen_solve(lam, d, window)
        t = x.tail
        slow = isinstance(t, EnvelopeTail) and t.kind == "geometric" and t.rate < 1.0
        if not (enlarge and slow and t.bound / (1.0 - t.rate) > window.tol and 2 * window.M <= max_M):
            return x
        window = window.doubled()


def _eigen_solve(lam: complex, d: DiscretePmf, window: TruncationWindow) -> ComplexSeq:
    M = window.M
    tr = _traces(lam, d, M)
    u = np.concatenate(([1.0 + 0j], np.cumprod(tr.ratio[:-1])))
    log_scale = np.concatenate(([0.0], np.cumsum(0.5 * tr.log_a[:-1])))
    u_M = u[-1] * tr.ratio[-1]
    tail = _envelope(lam, d, M, u_M)
    formal = isinstance(tail, EnvelopeTail) and tail.kind == "geometric" and tail.rate >= 1.0
    return ComplexSeq(u, lam, window, log_scale, tail, formal)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Real vector ``z = x + conj(x)`` with ``B_s z = 0``."""

    z: WeightedVector
    x: ComplexSeq
    residual: float  # weighted ||B_s z|| / ||z|| on the prefix
    eigen_residual: float
    certified_error: float  # weighted truncation bound on B_s z, relative to ||z||
    verdict: SpectralVerdict


def _kernel_parts(s: int, gamma1: float, d: DiscretePmf, window: TruncationWindow):
    lam = gamma1 * roots_of_unity(s)[0]
    x = eigenvector(lam, d, window, enlarge=False)
    xv = x.vector()
    z = combine(1.0, xv, 1.0, xv.conj()).real()
    bz = apply_B_product(s, gamma1, z, d, warn=False)
    return x, z, bz


def kernel_residual(s: int, gamma1: float, d: DiscretePmf, window: TruncationWindow) -> float:
    """``||B_s z|| / ||z||`` at a fixed window, no enlargement."""
    _, z, bz = _kernel_parts(s, gamma1, d, window.fit(d))
    return bz.norm() / z.norm()


def kernel_vector(
    s: int,
    gamma1: float,
    d: DiscretePmf,
    window: TruncationWindow | None = None,
    *,
    max_M: int = 1 << 16,
) -> Kernel:
    """Real kernel vector of ``B_s`` built from the eigenpair at ``gamma1 * lambda_1``.

    The window is doubled until the residual drops below ``window.tol``.

    Raises
    ------
    NotEigen
        If ``gamma1 * lambda_1`` is not certified as an eigenvalue.
    KernelResidualTooLarge
        If the residual is still above tolerance at ``max_M``.
    """
    if s < 2:
        raise InvalidS(f"need s >= 2, got {s}")
    window = (window or spectral_window(d)).fit(d)
    lam = gamma1 * roots_of_unity(s)[0]
    verdict = eigen_test(lam, d, window, ell=1)
    if verdict.is_eigen != "yes":
        raise NotEigen(f"gamma1*lambda_1 = {lam:.6g} is not an eigenvalue ({verdict.rationale})")
    while True:
        x, z, bz = _kernel_parts(s, gamma1, d, window)
        residual = bz.norm() / z.norm()
        if residual <= window.tol:
            return Kernel(z, x, residual, x.residual(d), bz.certified_weighted_error() / z.norm(), verdict)
        if 2 * window.M > max_M:
            raise KernelResidualTooLarge(f"residual {residual:.3e} > {window.tol:g} at M={window.M}")
        window = window.doubled()


def classify_injectivity(
    s: int, gamma1: float, d: DiscretePmf, window: TruncationWindow | None = None
) -> SpectralVerdict:
    """Injectivity of ``B_s = prod_l (A - gamma1 lambda_l)`` on sequences."""
    if s < 2:
        raise InvalidS(f"need s >= 2, got {s}")
    window = (window or spectral_window(d)).fit(d)
    c = d.window(window.M).c
    minima = {ell: float(np.min(a_factors(c[1:], s, gamma1, ell))) if len(c) > 1 else float("nan")
              for ell in range(1, s)}
    lam = gamma1 * roots_of_unity(s)[0]
    verdict = eigen_test(lam, d, window, ell=1)
    if s <= 4:
        is_eigen, injective = "no", "yes"
        rationale = f"s = {s}: every a_k,s = |1 - c_k lambda_1/gamma1|^2 exceeds 1, so no gamma1*lambda_l is an eigenvalue"
    else:
        is_eigen = verdict.is_eigen
        injective = {"yes": "no", "no": "yes"}.get(is_eigen, "inconclusive")
        rationale = f"s = {s}: l = 1 minimises a_k over l; {verdict.rationale}"
    return SpectralVerdict(
        lam=verdict.lam,
        ell=1,
        a_factors=verdict.a_factors,
        log_product=verdict.log_product,
        sstar_partials=verdict.sstar_partials,
        s_partials=verdict.s_partials,
        is_eigen=is_eigen,
        injective=injective,
        rationale=rationale,
        ell_minima=minima,
    )
