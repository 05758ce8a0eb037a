import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import z_band
from weakrec.errors import DegenerateDesign, StreamBudgetExceeded
from weakrec.operator import AffineTail, TruncationWindow, apply_A, from_values, regression_vector
from weakrec.pmf import GammaPair, from_gamma, from_raw, geometric
from weakrec.simulate import (
    estimate_regression,
    fit_line,
    iid_record_matrix,
    joint_record_prob,
    markov_matrix,
    sample_conditional,
    sample_iid_records,
    sample_markov_chain,
    total_variation,
)


def test_point_mass_path():
    path = sample_iid_records(from_raw([1.0]), 6, seed=1)
    assert list(path.values) == [0] * 6 and path.source == "iid-extraction"


def test_paths_nondecreasing_and_deterministic():
    d = from_gamma(GammaPair(1.0, 2.0))
    a = sample_iid_records(d, 8, seed=11)
    b = sample_iid_records(d, 8, seed=11)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(np.diff(a.values) >= 0)
    m = sample_markov_chain(d, 3, 10, seed=5)
    np.testing.assert_array_equal(m.values, sample_markov_chain(d, 3, 10, seed=5).values)
    assert m.values[0] == 3 and np.all(np.diff(m.values) >= 0)


def test_iid_increment_law_geometric():
    d = geometric(0.5)
    W = iid_record_matrix(d, 2, 10**6, np.random.default_rng(0))
    k = np.arange(60)
    assert total_variation(W[:, 1] - W[:, 0], 0.5 ** (k + 1)) < 0.01


def test_iid_increment_given_start():
    # restarting the stream at W = j, W_2 - j is geometric(0.5) by memorylessness
    d = geometric(0.5)
    W = iid_record_matrix(d, 2, 200_000, np.random.default_rng(1), start=4)
    assert np.all(W[:, 0] == 4)
    assert total_variation(W[:, 1] - 4, 0.5 ** (np.arange(60) + 1)) < 0.01


def test_uniform_transition_frequencies(uniform3):
    W = iid_record_matrix(uniform3, 2, 10**6, np.random.default_rng(2))
    for l in range(3):
        nxt = W[W[:, 0] == l, 1]
        exact = np.array([1 / (3 - l) if k >= l else 0.0 for k in range(3)])
        assert total_variation(nxt, exact) < 0.01
    sel = W[W[:, 0] == 1, 1]
    assert np.mean(sel == 2) == pytest.approx(0.5, abs=4 * math.sqrt(0.25 / sel.size))


def test_joint_three_record_law(uniform3):
    n = 10**6
    W = iid_record_matrix(uniform3, 3, n, np.random.default_rng(3))
    counts = np.bincount(W[:, 0] * 9 + W[:, 1] * 3 + W[:, 2], minlength=27)
    band = z_band(10)  # ten cells carry mass
    total = 0.0
    for k1 in range(3):
        for k2 in range(3):
            for k3 in range(3):
                # p_{k3} prod_{j<3} p_{k_j}/q_{k_j}, written out for the uniform law
                prob = 0.0 if not k1 <= k2 <= k3 else (1 / 3) * (1 / (3 - k1)) * (1 / (3 - k2))
                assert joint_record_prob(uniform3, (k1, k2, k3)) == pytest.approx(prob, abs=1e-15)
                total += prob
                se = math.sqrt(prob * (1 - prob) / n)
                assert abs(counts[k1 * 9 + k2 * 3 + k3] / n - prob) <= band * se
    assert total == pytest.approx(1.0)


def test_markov_absorbing_top(uniform3):
    assert list(sample_markov_chain(uniform3, 2, 7, seed=0).values) == [2] * 8


def test_markov_start_outside_support(uniform3):
    with pytest.raises(ValueError):
        sample_markov_chain(uniform3, 3, 2)


def _within(est, exact, band=3.0):
    return all(abs(e.mean - exact(e.j)) <= band * e.stderr for e in est)


def test_markov_geometric_mean():
    est = estimate_regression(geometric(0.5), 5, [0], 100_000, seed=4)
    assert _within(est, lambda j: 5.0)


def test_markov_uniform_mean(uniform3):
    est = estimate_regression(uniform3, 2, [0], 100_000, seed=5)
    assert _within(est, lambda j: 1.5)


def test_estimate_regression_geometric_line():
    est = estimate_regression(geometric(0.5), 5, range(10), 100_000, seed=6)
    assert _within(est, lambda j: j + 5.0)


def test_estimate_regression_rational_family_truncated():
    # W has tail k^-2 here, so Var(W) is infinite and a sample-stderr band on the raw
    # mean is invalid; min(W, T) has finite variance and an exact value from the operator
    d = from_gamma(GammaPair(1.0, 2.0))
    T, s, n = 200, 2, 200_000
    w = TruncationWindow(4000, 6)
    v = from_values(d, w, np.minimum(np.arange(w.M), T).astype(float), AffineTail(float(T), 0.0))
    for _ in range(s):
        v = apply_A(v, d)
    exact = v.values(d)
    band = z_band(6)
    for j in range(6):
        rng = np.random.default_rng(np.random.SeedSequence([7, j]))
        x = np.minimum(markov_matrix(d, j, s, n, rng)[:, -1], T)
        se = x.std(ddof=1) / math.sqrt(n)
        assert abs(x.mean() - exact[j]) <= band * se


def test_rational_family_truncated_means_approach_line():
    d = from_gamma(GammaPair(1.0, 2.0))
    e = regression_vector(d, 2, TruncationWindow(4000, 6)).values(d)
    np.testing.assert_allclose(e, 3.0 + 4.0 * np.arange(6), rtol=1e-9)


@pytest.mark.parametrize("d", [geometric(0.3), from_gamma(GammaPair(2.0, 1.5)), from_raw([0.1, 0.2, 0.3, 0.4])], ids=repr)
@pytest.mark.parametrize("s", [1, 3, 6])
def test_agreement_with_operator(d, s):
    exact = regression_vector(d, s, TruncationWindow(2000, 10)).values(d)
    js = range(min(10, len(exact)))
    est = estimate_regression(d, s, js, 20_000, seed=8)
    assert _within(est, lambda j: exact[j], z_band(90))


def test_thread_count_does_not_change_results():
    d = geometric(0.5)
    a = estimate_regression(d, 3, range(5), 1000, seed=9, threads=1)
    b = estimate_regression(d, 3, range(5), 1000, seed=9, threads=4)
    assert a == b


def test_minimum_paths():
    e = estimate_regression(geometric(0.5), 2, [0], 100, seed=1)[0]
    assert 0 < e.stderr < math.inf and e.n_samples == 100
    with pytest.raises(ValueError):
        estimate_regression(geometric(0.5), 2, [0], 99)


def test_stream_budget():
    d = from_raw([0.999, 0.001])
    with pytest.raises(StreamBudgetExceeded):
        iid_record_matrix(d, 2, 50, np.random.default_rng(0), start=1, max_draws=10)


@given(st.integers(0, 50), st.integers(0, 2**32 - 1))
def test_conditional_draws_respect_state(j, seed):
    d = from_gamma(GammaPair(1.0, 2.0), tail_mass_target=1e-3)
    states = np.full(200, j + d.n_stored // 2)
    out = sample_conditional(d, states, np.random.default_rng(seed))
    assert np.all(out >= states)


def test_tail_sampler_beyond_prefix():
    # states past the stored prefix use the closed-form tail: P(X >= k | X >= l) = q_k / q_l
    d = from_gamma(GammaPair(1.0, 2.0), tail_mass_target=1e-2)
    l = d.n_stored + 5
    out = sample_conditional(d, np.full(200_000, l), np.random.default_rng(0))
    win = d.window(l + 40)
    for k in (l + 1, l + 5, l + 20):
        exact = win.q[k] / win.q[l]
        assert np.mean(out >= k) == pytest.approx(exact, abs=4 * math.sqrt(exact / 200_000))


def test_fit_line_exact():
    pts = [(j, 3.0 + 0.25 * j, 0.0) for j in range(10)]
    f = fit_line(pts)
    assert f.beta0 == pytest.approx(3.0, abs=1e-12) and f.beta1 == pytest.approx(0.25, abs=1e-12)


def test_fit_line_nonlinear_points():
    f = fit_line([(0, 0.75, 0.01), (1, 1.5, 0.01), (2, 2.0, 0.01)])
    assert f.max_residual > 3


def test_fit_line_degenerate():
    with pytest.raises(DegenerateDesign):
        fit_line([(2, 1.0, 0.1), (2, 1.2, 0.1)])


@given(st.floats(-5, 5), st.floats(-5, 5), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=20))
def test_fit_line_recovers_lines(b0, b1, se):
    pts = [(j, b0 + b1 * j, s) for j, s in enumerate(se)]
    f = fit_line(pts)
    assert f.beta0 == pytest.approx(b0, abs=1e-9) and f.beta1 == pytest.approx(b1, abs=1e-9)


def test_markov_matrix_shape():
    out = markov_matrix(geometric(0.5), 2, 3, 7, np.random.default_rng(0))
    assert out.shape == (7, 4) and np.all(out[:, 0] == 2)
