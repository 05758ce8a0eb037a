import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakrec.errors import (
    InvalidCoeffs,
    InvalidGamma,
    NegativeMass,
    NonIntegerSupport,
    NotNormalized,
)
from weakrec.pmf import (
    GammaPair,
    GeometricTail,
    RationalTail,
    RegressionCoeffs,
    beta_to_gamma,
    check_moment_membership,
    from_gamma,
    from_raw,
    gamma_to_beta,
    geometric,
    parse_dist,
)

GRID = [(g0, g1) for g0 in (0.5, 1.0, 2.0) for g1 in (0.5, 1.0, 1.5, 2.0)]
ADMISSIBLE = [(g0, g1) for g0, g1 in GRID if g1 >= 1 or float(g0 / (1 - g1)).is_integer()]


def _hand_tail(g0, g1, n):
    """q_{j+1} (g0 + g1 - (1-g1) j) = q_j (g0 - (1-g1) j), in exact rationals."""
    g0, g1 = Fraction(g0), Fraction(g1)
    q = [Fraction(1)]
    for j in range(n):
        q.append(q[-1] * (g0 - (1 - g1) * j) / (g0 + g1 - (1 - g1) * j))
    return q


def test_uniform_from_hand_recursion():
    q = _hand_tail(1, Fraction(1, 2), 3)
    assert q[:3] == [1, Fraction(2, 3), Fraction(1, 3)] and q[3] == 0
    d = from_gamma(GammaPair(1.0, 0.5))
    assert d.support == 2
    np.testing.assert_allclose(d.p, [1 / 3] * 3, rtol=0, atol=1e-15)
    # e_1(j) = 1 + j/2 by direct finite summation
    p = [Fraction(1, 3)] * 3
    for j in range(3):
        e1 = sum(k * p[k] for k in range(j, 3)) / sum(p[j:])
        assert e1 == 1 + Fraction(j, 2)


def test_geometric_branch():
    d = from_gamma(GammaPair(1.0, 1.0))
    k = np.arange(30)
    np.testing.assert_allclose(d.p[:30], 0.5 ** (k + 1), rtol=1e-15)
    np.testing.assert_allclose(d.q[:30], 0.5**k, rtol=1e-15)
    assert isinstance(d.tail_model, GeometricTail) and d.tail_model.theta == pytest.approx(0.5)


def test_rational_family_matches_telescoping_closed_form():
    d = from_gamma(GammaPair(1.0, 2.0))
    j = np.arange(5000, dtype=float)
    np.testing.assert_allclose(d.q[:5000], 2 / ((j + 1) * (j + 2)), rtol=1e-12)
    np.testing.assert_allclose(d.p[:5000], 4 / ((j + 1) * (j + 2) * (j + 3)), rtol=1e-12)
    np.testing.assert_allclose(d.c[:5000], 2 / (j + 3), rtol=1e-14)
    assert isinstance(d.tail_model, RationalTail)
    # telescoping: sum_{j<n} p_j = 1 - q_n and sum_j j p_j = sum_{j>=1} q_j = 2 sum 1/((j+1)(j+2)) = 1
    n = d.n_stored
    assert math.fsum(d.p) == pytest.approx(1 - 2 / ((n + 1) * (n + 2)), abs=1e-12)
    assert d.q_end == pytest.approx(2 / ((n + 1) * (n + 2)), rel=1e-9)


def test_non_integer_support_rejected():
    with pytest.raises(NonIntegerSupport):
        from_gamma(GammaPair(1.3, 0.5))


@pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, -1.0), (-2.0, 0.5)])
def test_invalid_gamma(bad):
    with pytest.raises(InvalidGamma):
        GammaPair(*bad)


def test_raw_tail_sums():
    d = from_raw([0.5, 0.25, 0.25])
    np.testing.assert_allclose(d.q, [1, 0.5, 0.25])
    np.testing.assert_allclose(d.c, [0.5, 0.5, 1])
    assert d.support == 2


def test_point_mass():
    d = from_raw([1.0])
    assert d.support == 0 and list(d.q) == [1.0] and list(d.c) == [1.0]


def test_raw_errors():
    with pytest.raises(NotNormalized):
        from_raw([0.5, 0.6])
    with pytest.raises(NegativeMass):
        from_raw([1.2, -0.2])


def test_raw_trailing_zeros_trimmed():
    d = from_raw([0.5, 0.5, 0.0, 0.0])
    assert d.support == 1


@pytest.mark.parametrize(
    "b0, b1, s, g0, g1",
    [(3.0, 4.0, 2, 1.0, 2.0), (5.0, 1.0, 5, 1.0, 1.0), (1.0, 1.0, 1, 1.0, 1.0)],
)
def test_beta_to_gamma_examples(b0, b1, s, g0, g1):
    g = beta_to_gamma(RegressionCoeffs(b0, b1, s))
    assert g.gamma0 == pytest.approx(g0, rel=1e-12) and g.gamma1 == pytest.approx(g1, rel=1e-12)


@pytest.mark.parametrize("g0,g1", GRID)
@pytest.mark.parametrize("s", [1, 3, 6])
def test_gamma_to_beta_matches_closed_quotient(g0, g1, s):
    # away from gamma1 = 1 the intercept is g0 (1 - g1^s) / (1 - g1)
    b = gamma_to_beta(GammaPair(g0, g1), s)
    expected = s * g0 if g1 == 1 else g0 * (1 - g1**s) / (1 - g1)
    assert b.beta0 == pytest.approx(expected, rel=1e-13)
    assert b.beta1 == pytest.approx(g1**s, rel=1e-15)


def test_invalid_coeffs():
    with pytest.raises(InvalidCoeffs):
        RegressionCoeffs(1.0, 1.0, 0)
    with pytest.raises(InvalidCoeffs):
        RegressionCoeffs(-1.0, 1.0, 2)


@pytest.mark.parametrize("g0,g1", GRID)
@pytest.mark.parametrize("s", range(1, 7))
def test_round_trip_grid(g0, g1, s):
    g = GammaPair(g0, g1)
    back = beta_to_gamma(gamma_to_beta(g, s))
    assert back.gamma0 == pytest.approx(g0, rel=1e-12)
    assert back.gamma1 == pytest.approx(g1, rel=1e-12)


@given(
    st.floats(0.05, 20.0),
    st.floats(0.05, 5.0),
    st.integers(1, 8),
)
def test_round_trip_property(g0, g1, s):
    g = GammaPair(g0, g1)
    b = gamma_to_beta(g, s)
    back = beta_to_gamma(b)
    assert back.gamma0 == pytest.approx(g0, rel=1e-10)
    assert back.gamma1 == pytest.approx(g1, rel=1e-12)


def _conditional_mean_oracle(d, j_max):
    """(1/q_j) sum_{k>=j} k p_k by longdouble suffix sums, tail closed from the excess mean."""
    k = np.arange(d.n_stored, dtype=np.longdouble)
    kp = k * d.p.astype(np.longdouble)
    suffix = np.cumsum(kp[::-1])[::-1]
    if d.is_finite:
        tail = np.longdouble(0)
    else:
        mu0, mu1 = d.tail_model.excess_mean()
        tail = np.longdouble(d.q_end) * (np.longdouble(mu0) + np.longdouble(mu1) * d.n_stored)
    return ((suffix[:j_max] + tail) / d.q[:j_max].astype(np.longdouble)).astype(float)


@pytest.mark.parametrize("g0,g1", ADMISSIBLE)
def test_adjacent_regression_invariant(g0, g1):
    d = from_gamma(GammaPair(g0, g1))
    n = min(d.n_stored, 2000)
    j = np.arange(n)
    err = np.abs(_conditional_mean_oracle(d, n) - (g0 + g1 * j))
    assert err.max() < 1e-9


@pytest.mark.parametrize("g0,g1", ADMISSIBLE)
def test_tail_recursion_consistency(g0, g1):
    d = from_gamma(GammaPair(g0, g1))
    n = min(d.n_stored - 1, 100_000)
    j = np.arange(n, dtype=float)
    lhs = d.q[1 : n + 1] * (g0 + g1 - (1 - g1) * j)
    rhs = d.q[:n] * (g0 - (1 - g1) * j)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


@given(st.floats(0.1, 5.0), st.floats(1.01, 4.0))
def test_rational_family_is_a_law(g0, g1):
    d = from_gamma(GammaPair(g0, g1), tail_mass_target=1e-6)
    assert np.all(d.p >= 0)
    assert np.all(np.diff(d.q) <= 0)
    assert math.fsum(d.p) + d.q_end == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12).filter(lambda v: sum(v) > 0.1))
def test_from_raw_invariants(w):
    p = np.array(w) / math.fsum(w)
    d = from_raw(p)
    assert d.q[0] == 1.0
    assert np.all(d.p >= 0)
    assert math.fsum(d.p) == pytest.approx(1.0, abs=1e-12)
    assert d.c[-1] == 1.0
    np.testing.assert_allclose(d.q[:-1] - d.q[1:], d.p[:-1], atol=1e-15)


def test_membership_examples():
    r = check_moment_membership(geometric(0.5), 5)
    assert r.member and r.mean == pytest.approx(1.0, abs=1e-12)
    assert check_moment_membership(from_gamma(GammaPair(1.0, 0.5)), 3).member
    r = check_moment_membership(from_gamma(GammaPair(1.0, 2.0)), 2)
    assert r.member and r.mean == pytest.approx(1.0, abs=1e-9)


def test_window_extends_past_stored_prefix():
    d = from_gamma(GammaPair(1.0, 2.0), tail_mass_target=1e-4)
    win = d.window(d.n_stored + 500)
    j = np.arange(len(win.q), dtype=float)
    np.testing.assert_allclose(win.q, 2 / ((j + 1) * (j + 2)), rtol=1e-10)


@pytest.mark.parametrize(
    "spec, support",
    [("geo:0.5", None), ("gamma:1,0.5", 2), ("raw:0.2,0.8", 1), ("gamma:1,2", None)],
)
def test_parse_dist(spec, support):
    assert parse_dist(spec).support == support


@pytest.mark.parametrize("spec", ["geo:", "foo:1", "gamma:1", "raw:a,b", "geo:1.5"])
def test_parse_dist_rejects(spec):
    with pytest.raises(ValueError):
        parse_dist(spec)
