"""Desk-scale verification grid, shared by ``weakrec verify-all`` and the test suite.

Each criterion returns a :class:`CriterionResult`; the stated runtime budget
is part of the pass condition.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operator import (
    TruncationWindow,
    apply_A,
    apply_B_poly,
    apply_B_product,
    bidiagonal_shift,
    check_recursion,
    deviation_vector,
    identity_vector,
    regression_vector,
)
from .pmf import (
    DiscretePmf,
    GammaPair,
    RegressionCoeffs,
    beta_to_gamma,
    from_gamma,
    from_raw,
    gamma_to_beta,
    geometric,
)
from .simulate import (
    estimate_regression,
    fit_line,
    iid_record_matrix,
    joint_record_prob,
    total_variation,
)
from .spectral import (
    a_factor,
    classify_injectivity,
    eigenvector,
    kernel_residual,
    partial_sums,
    roots_of_unity,
)

GAMMA0_GRID = (0.5, 1.0, 2.0)
GAMMA1_GRID = (0.5, 1.0, 1.5, 2.0)
S_GRID = range(1, 7)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    area: str
    passed: bool
    seconds: float
    detail: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number}. {self.name} ({self.seconds:.2f}s): {self.detail}"


def family_grid() -> list[tuple[GammaPair, DiscretePmf]]:
    out = []
    for g0, g1 in itertools.product(GAMMA0_GRID, GAMMA1_GRID):
        if g1 < 1 and abs(g0 / (1 - g1) - round(g0 / (1 - g1))) > 1e-9:
            continue
        g = GammaPair(g0, g1)
        out.append((g, from_gamma(g)))
    return out


def random_pmfs(n: int = 20, max_atoms: int = 10, seed: int = 20240607) -> list[DiscretePmf]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        atoms = int(rng.integers(2, max_atoms + 1))
        out.append(from_raw(rng.dirichlet(np.ones(atoms))))
    return out


def _timed(number, name, area, budget, body) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    dt = time.perf_counter() - t0
    if ok and dt > budget:
        ok, detail = False, f"{detail}; runtime {dt:.2f}s over budget {budget:g}s"
    return CriterionResult(number, name, area, bool(ok), dt, detail)


def criterion_family_linearity() -> CriterionResult:
    def body():
        worst = 0.0
        where = None
        for g, d in family_grid():
            window = TruncationWindow(2000, 200, 1e-8).fit(d)
            e = identity_vector(d, window)
            for s in S_GRID:
                e = apply_A(e, d)
                b = gamma_to_beta(g, s)
                j = np.arange(window.L)
                gap = float(np.max(np.abs(e.values(d) - b.beta0 - b.beta1 * j)))
                if gap > worst:
                    worst, where = gap, (g.gamma0, g.gamma1, s)
        return worst < 1e-8, f"max |e_s(j) - beta0 - beta1 j| = {worst:.2e} at (g0, g1, s) = {where}"

    return _timed(1, "family linearity", "pmf", 10.0, body)


def criterion_recursion_identities() -> CriterionResult:
    def body():
        rng = np.random.default_rng(7)
        worst_def = worst_rel = worst_rec = 0.0
        for d in random_pmfs():
            g = GammaPair(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
            window = TruncationWindow(d.support + 1, d.support + 1)
            d1 = deviation_vector(d, g, 1, window)
            for m in S_GRID:
                dm = deviation_vector(d, g, m, window)
                poly = apply_B_poly(m, g.gamma1, d1, d)
                prod = apply_B_product(m, g.gamma1, d1, d, warn=False)
                pv = poly.values(d)
                worst_def = max(worst_def, float(np.max(np.abs(dm.values(d) - pv))))
                scale = max(float(np.max(np.abs(pv))), 1e-300)
                worst_rel = max(worst_rel, float(np.max(np.abs(prod.values(d) - pv))) / scale)
            worst_rec = max(worst_rec, check_recursion(d, g, 6, window).residual)
        ok = worst_def < 1e-11 and worst_rel < 1e-10 and worst_rec < 1e-11
        return ok, (
            f"|d_m - B_m d_1| = {worst_def:.2e}, poly/product rel gap = {worst_rel:.2e}, "
            f"recursion residual = {worst_rec:.2e}"
        )

    return _timed(2, "recursion and reduction identities", "operator", 5.0, body)


def criterion_dichotomy() -> CriterionResult:
    def body():
        failures = []
        tested = [(d, (g.gamma1,)) for g, d in family_grid()]
        tested += [(geometric(p), (1.0, 1.5)) for p in (0.3, 0.5, 0.6, 0.7)]
        tested += [(d, (1.0, 1.5)) for d in random_pmfs()]
        count = 0
        for d, gammas in tested:
            for g1, s in itertools.product(gammas, (2, 3, 4)):
                v = classify_injectivity(s, g1, d)
                count += 1
                if v.injective != "yes" or np.min(v.a_factors[1:], initial=np.inf) <= 1.0:
                    failures.append(f"{d!r} s={s} g1={g1}")
        for p, g1, s in itertools.product((0.3, 0.5, 0.6), (1.0, 1.5), (5, 6, 8)):
            count += 1
            if classify_injectivity(s, g1, geometric(p)).injective != "no":
                failures.append(f"geo({p}) s={s} g1={g1} expected non-injective")
        count += 1
        if classify_injectivity(5, 1.0, geometric(0.7)).injective != "yes":
            failures.append("geo(0.7) s=5 g1=1 expected injective")
        return not failures, f"{count} verdicts checked" + (f"; failures: {failures[:5]}" if failures else "")

    return _timed(3, "injectivity dichotomy", "spectral", 5.0, body)


def criterion_eigenpair() -> CriterionResult:
    def body():
        d = geometric(0.5)
        lam = roots_of_unity(5)[0]
        x = eigenvector(lam, d, TruncationWindow(2000, 200, 1e-10))
        res = x.residual(d)
        direct, product = partial_sums(lam, d, 200)
        rel = float(np.max(np.abs(direct - product) / np.abs(product)))
        a = a_factor(1, 5, 1.0, d)
        ok = res < 1e-10 and rel < 1e-10 and abs(a - 0.940983) <= 1e-6
        return ok, f"eigen residual {res:.2e}, |S_n| sum/product rel gap {rel:.2e}, a_1,5 = {a:.7f}"

    return _timed(4, "eigenpair certificate", "spectral", 1.0, body)


def criterion_kernel() -> CriterionResult:
    def body():
        d = geometric(0.5)
        window = TruncationWindow(2000, 200, 1e-6)
        lam = roots_of_unity(5)[0]
        x = eigenvector(lam, d, window)
        z0 = 2.0 * x.u[0].real / d.q[0]
        residuals = [kernel_residual(5, 1.0, d, TruncationWindow(M, 200, 1e-6)) for M in (500, 1000, 2000, 4000)]
        at_2000 = residuals[2]
        monotone = all(b <= a for a, b in zip(residuals, residuals[1:]))
        ok = z0 == 2.0 and at_2000 < 1e-6 and monotone
        trace = ", ".join(f"{r:.1e}" for r in residuals)
        return ok, f"z_0 = {z0:g}, ||B_5 z||/||z|| at M=500..4000: {trace}"

    return _timed(5, "kernel demonstration", "spectral", 2.0, body)


def criterion_shift_fixture() -> CriterionResult:
    def body():
        worst = 0.0
        for n in (2, 3, 10, 101, 1000, 10**5):
            v = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
            worst = max(worst, float(np.max(np.abs(bidiagonal_shift(v)))))
        return worst == 0.0, f"max |B v| over windows up to 1e5: {worst:g}"

    return _timed(6, "shift-matrix fixture", "operator", 1.0, body)


def criterion_monte_carlo(seed: int = 12345) -> CriterionResult:
    def body():
        d = geometric(0.5)
        s = 5
        exact = regression_vector(d, s).values(d, 10)
        est = estimate_regression(d, s, range(10), 10**5, seed)
        z = [abs(e.mean - exact[e.j]) / e.stderr for e in est]
        rng = np.random.default_rng(seed)
        W = iid_record_matrix(d, 2, 10**6, rng)
        tv_geo = total_variation(W[:, 1] - W[:, 0], d.window(64).p)
        u = from_gamma(GammaPair(1.0, 0.5))
        W2 = iid_record_matrix(u, 2, 10**6, rng)
        joint2 = np.array([[joint_record_prob(u, (a, b)) for b in range(3)] for a in range(3)])
        tv_uni = total_variation(W2[:, 0] * 3 + W2[:, 1], joint2.ravel())
        n = 10**6
        W3 = iid_record_matrix(u, 3, n, rng)
        cells = W3[:, 0] * 9 + W3[:, 1] * 3 + W3[:, 2]
        counts = np.bincount(cells, minlength=27) / n
        worst_cell = 0.0
        for k1, k2, k3 in itertools.product(range(3), repeat=3):
            prob = joint_record_prob(u, (k1, k2, k3))
            se = math.sqrt(prob * (1 - prob) / n) if 0 < prob < 1 else 0.0
            gap = abs(counts[k1 * 9 + k2 * 3 + k3] - prob)
            worst_cell = max(worst_cell, gap / se if se else (0.0 if gap == 0 else math.inf))
        ok = max(z) <= 3.0 and tv_geo < 0.01 and tv_uni < 0.01 and worst_cell <= 3.0
        return ok, (
            f"max |z| = {max(z):.2f}, TV geo = {tv_geo:.4f}, TV uniform = {tv_uni:.4f}, "
            f"joint 3-record worst cell = {worst_cell:.2f} SE"
        )

    return _timed(7, "Monte Carlo agreement", "simulate", 60.0, body)


def criterion_round_trips() -> CriterionResult:
    def body():
        worst = 0.0
        for g0, g1, s in itertools.product(GAMMA0_GRID, GAMMA1_GRID, S_GRID):
            g = GammaPair(g0, g1)
            b = gamma_to_beta(g, s)
            g2 = beta_to_gamma(b)
            b2 = gamma_to_beta(g2, s)
            worst = max(
                worst,
                abs(g2.gamma0 - g0) / g0,
                abs(g2.gamma1 - g1) / g1,
                abs(b2.beta0 - b.beta0) / b.beta0,
                abs(b2.beta1 - b.beta1) / b.beta1,
            )
        return worst < 1e-12, f"max relative round-trip error {worst:.2e}"

    return _timed(8, "beta/gamma round trips", "pmf", 1.0, body)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_family_linearity,
    2: criterion_recursion_identities,
    3: criterion_dichotomy,
    4: criterion_eigenpair,
    5: criterion_kernel,
    6: criterion_shift_fixture,
    7: criterion_monte_carlo,
    8: criterion_round_trips,
}
AREAS = {1: "pmf", 2: "operator", 3: "spectral", 4: "spectral", 5: "spectral", 6: "operator", 7: "simulate", 8: "pmf"}


def linearity_check(d: DiscretePmf, s: int, window: TruncationWindow | None = None) -> CriterionResult:
    """Does ``e_s`` of an arbitrary law lie on a line?  Fits the line, then checks ``d_s``."""

    def body():
        e = regression_vector(d, s, window)
        vals = e.values(d)
        j = np.arange(len(vals))
        if len(vals) < 2:
            return True, "single support point"
        fit = fit_line([(jj, v, 0.0) for jj, v in zip(j, vals)])
        try:
            g = beta_to_gamma(RegressionCoeffs(fit.beta0, fit.beta1, s))
        except ValueError as exc:
            return False, f"fitted line not admissible: {exc}"
        dev = deviation_vector(d, g, s, e.window)
        worst = float(np.max(np.abs(dev.values(d))))
        return worst < e.window.tol, f"{d!r}: max |d_{s}| = {worst:.2e} (tol {e.window.tol:g})"

    return _timed(0, f"linearity of supplied law at s={s}", "operator", math.inf, body)


def run(only: str | None = None) -> list[CriterionResult]:
    return [fn() for n, fn in CRITERIA.items() if only is None or AREAS[n] == only]
