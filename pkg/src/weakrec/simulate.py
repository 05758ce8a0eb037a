"""Monte Carlo weak records, independent of the operator code path.

Two generators are provided:

* literal extraction from an iid stream ``X_1, X_2, ...`` by the record-time
  rule ``T_n = inf{k > T_{n-1} : X_k >= X_{T_{n-1}}}``;
* direct simulation of the Markov chain with transitions ``p_k / q_l``,
  ``k >= l``.

Both sample ``X`` given ``X >= l`` by inverting ``P(X >= k | X >= l) = q_k/q_l``
against the stored tail array (binary search), falling back to the
closed-form tail model beyond the stored prefix.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDesign, StreamBudgetExceeded
from .pmf import DiscretePmf, GeometricTail, RationalTail

__all__ = [
    "LineFit",
    "RecordPath",
    "RegressionEstimate",
    "estimate_regression",
    "fit_line",
    "iid_record_matrix",
    "joint_record_prob",
    "markov_matrix",
    "sample_conditional",
    "sample_iid_records",
    "sample_markov_chain",
    "total_variation",
    "worker_count",
]

DEFAULT_MAX_DRAWS = 10**8
_BLOCK = 1 << 22


def worker_count() -> int:
    """Thread cap from ``WEAKREC_THREADS`` (default: CPU count)."""
    env = os.environ.get("WEAKREC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class RecordPath:
    values: np.ndarray
    source: str  # "iid-extraction" or "markov"
    seed: object


@dataclass(frozen=True)
class RegressionEstimate:
    j: int
    s: int
    mean: float
    stderr: float
    n_samples: int


# -- conditional sampling ---------------------------------------------------


def _log_q(d: DiscretePmf, states: np.ndarray) -> np.ndarray:
    """``log q_l`` for arbitrary states, closed form beyond the stored prefix."""
    n = d.n_stored
    out = np.empty(states.shape, dtype=float)
    inside = states < n
    with np.errstate(divide="ignore"):
        out[inside] = np.log(d.q[states[inside]])
    if np.any(~inside):
        out[~inside] = math.log(d.q_end) + _tail_log_ratio(d, states[~inside])
    return out


def _tail_log_ratio(d: DiscretePmf, k: np.ndarray) -> np.ndarray:
    """``log(q_k / q_n)`` for ``k >= n = n_stored``."""
    n = d.n_stored
    model = d.tail_model
    if isinstance(model, GeometricTail):
        return (k - n) * math.log(model.ratio)
    if isinstance(model, RationalTail):
        return model.log_q_ratio(np.full(k.shape, n), k)
    raise IndexError("state outside a finite support")


def _tail_inverse(d: DiscretePmf, log_t: np.ndarray) -> np.ndarray:
    """Largest ``k >= n`` with ``log q_k >= log_t`` (requires ``log_t <= log q_n``)."""
    n = d.n_stored
    model = d.tail_model
    rel = log_t - math.log(d.q_end)
    if isinstance(model, GeometricTail):
        k = n + np.floor(rel / math.log(model.ratio)).astype(np.int64)
        return np.maximum(k, n)
    if isinstance(model, RationalTail):
        lo = np.full(rel.shape, n, dtype=np.int64)  # satisfies the condition
        hi = lo + 1
        base = np.full(rel.shape, n)
        # exponential search for an index that fails
        while True:
            ok = model.log_q_ratio(base, hi) >= rel
            if not ok.any():
                break
            lo = np.where(ok, hi, lo)
            hi = np.where(ok, 2 * hi - n + 1, hi)
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            ok = model.log_q_ratio(base, mid) >= rel
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return lo
    raise IndexError("tail sampling on a finite support")


def sample_conditional(d: DiscretePmf, states, rng: np.random.Generator) -> np.ndarray:
    """Draw ``X`` given ``X >= l`` for each ``l`` in ``states``."""
    states = np.asarray(states, dtype=np.int64)
    u = 1.0 - rng.random(states.shape)  # (0, 1]
    log_t = np.log(u) + _log_q(d, states)
    t = np.exp(log_t)
    # number of stored k with q_k >= t
    count = np.searchsorted(-d.q, -t, side="right")
    out = count.astype(np.int64) - 1
    if not d.is_finite and d.q_end > 0:
        beyond = (count == d.n_stored) & (log_t <= math.log(d.q_end))
        if np.any(beyond):
            out[beyond] = _tail_inverse(d, log_t[beyond])
    # rounding in exp(log t) must not push a draw below its conditioning state
    return np.maximum(out, states)


# -- iid extraction ---------------------------------------------------------


def iid_record_matrix(
    d: DiscretePmf,
    n_records: int,
    n_paths: int,
    rng: np.random.Generator,
    *,
    start: int | None = None,
    max_draws: int = DEFAULT_MAX_DRAWS,
) -> np.ndarray:
    """First ``n_records`` weak records of ``n_paths`` independent iid streams.

    With ``start`` given, each path is restarted with current record ``start``
    (column 0) and the following records are extracted from fresh draws.
    """
    if n_records < 1:
        raise ValueError("n_records must be >= 1")
    W = np.empty((n_paths, n_records), dtype=np.int64)
    draws = np.zeros(n_paths, dtype=np.int64)
    if start is None:
        W[:, 0] = sample_conditional(d, np.zeros(n_paths, dtype=np.int64), rng)
        draws += 1
    else:
        W[:, 0] = start
    zero = np.zeros(1, dtype=np.int64)
    for r in range(1, n_records):
        cur = W[:, r - 1].copy()
        pending = np.arange(n_paths)
        while pending.size:
            q_cur = np.exp(_log_q(d, cur[pending]))
            want = int(math.ceil(4.0 / max(float(np.median(q_cur)), 1e-300)))
            k = max(1, min(want, _BLOCK // pending.size, max_draws))
            X = sample_conditional(d, np.broadcast_to(zero, (pending.size * k,)), rng).reshape(pending.size, k)
            hit = X >= cur[pending, None]
            found = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            done = pending[found]
            W[done, r] = X[found, first[found]]
            draws[done] += first[found] + 1
            draws[pending[~found]] += k
            if np.any(draws > max_draws):
                raise StreamBudgetExceeded(f"more than {max_draws} draws needed for one path")
            pending = pending[~found]
    return W


def sample_iid_records(
    d: DiscretePmf,
    n_records: int,
    seed=None,
    *,
    start: int | None = None,
    max_draws: int = DEFAULT_MAX_DRAWS,
) -> RecordPath:
    W = iid_record_matrix(d, n_records, 1, _rng(seed), start=start, max_draws=max_draws)
    return RecordPath(W[0], "iid-extraction", seed)


# -- Markov chain -----------------------------------------------------------


def markov_matrix(d: DiscretePmf, start, steps: int, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """``n_paths`` chains of ``steps`` transitions; column 0 holds ``start``."""
    out = np.empty((n_paths, steps + 1), dtype=np.int64)
    out[:, 0] = start
    for i in range(steps):
        out[:, i + 1] = sample_conditional(d, out[:, i], rng)
    return out


def sample_markov_chain(d: DiscretePmf, start: int, steps: int, seed=None) -> RecordPath:
    if d.is_finite and not 0 <= start <= d.support:
        raise ValueError(f"start {start} outside the support")
    return RecordPath(markov_matrix(d, start, steps, 1, _rng(seed))[0], "markov", seed)


def _estimate_one(d: DiscretePmf, s: int, j: int, n: int, seed: int) -> RegressionEstimate:
    rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
    final = markov_matrix(d, j, s, n, rng)[:, -1].astype(float)
    stderr = float(final.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return RegressionEstimate(j, s, float(final.mean()), stderr, n)


def estimate_regression(
    d: DiscretePmf,
    s: int,
    j_values: Iterable[int],
    paths_per_j: int,
    seed: int = 0,
    *,
    threads: int | None = None,
) -> list[RegressionEstimate]:
    """Empirical ``E(W_{i+s} | W_i = j)`` from independent chains started at ``j``.

    Each ``j`` uses its own RNG stream derived from ``(seed, j)``, so results
    do not depend on the thread count or evaluation order.
    """
    if paths_per_j < 100:
        raise ValueError("paths_per_j must be at least 100")
    j_values = list(j_values)
    threads = threads or worker_count()
    if threads <= 1 or len(j_values) == 1:
        return [_estimate_one(d, s, j, paths_per_j, seed) for j in j_values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: _estimate_one(d, s, j, paths_per_j, seed), j_values))


# -- fitting and comparison -------------------------------------------------


@dataclass(frozen=True)
class LineFit:
    beta0: float
    beta1: float
    max_residual: float  # largest |standardized residual|
    residuals: np.ndarray


def fit_line(points: Sequence[tuple[float, float, float]]) -> LineFit:
    """Inverse-variance weighted least squares through ``(j, mean, stderr)``.

    A zero standard error is treated as exact data: when every point is exact
    the fit uses unit weights and reports raw residuals.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    j, y, se = pts.T
    if np.unique(j).size < 2:
        raise DegenerateDesign("need at least two distinct conditioning values")
    if np.all(se <= 0):
        se = np.ones_like(se)
    else:
        se = np.where(se > 0, se, se[se > 0].min())
    w = 1.0 / se
    X = np.column_stack([np.ones_like(j), j]) * w[:, None]
    (b0, b1), *_ = np.linalg.lstsq(X, y * w, rcond=None)
    resid = (y - b0 - b1 * j) / se
    return LineFit(float(b0), float(b1), float(np.max(np.abs(resid))), resid)


def total_variation(samples: np.ndarray, probs: np.ndarray) -> float:
    """TV distance between the empirical law of integer ``samples`` and ``probs``."""
    samples = np.asarray(samples, dtype=np.int64)
    n = max(int(samples.max()) + 1, len(probs))
    emp = np.bincount(samples, minlength=n) / samples.size
    ref = np.zeros(n)
    ref[: len(probs)] = probs
    return 0.5 * float(np.abs(emp - ref).sum() + max(0.0, 1.0 - ref.sum()))


def joint_record_prob(d: DiscretePmf, ks: Sequence[int]) -> float:
    """``P(W_1 = k_1, ..., W_n = k_n) = p_{k_n} prod_{j<n} p_{k_j} / q_{k_j}``."""
    ks = list(ks)
    if any(b < a for a, b in zip(ks, ks[1:])):
        return 0.0
    win = d.window(max(ks) + 1)
    prob = win.p[ks[-1]]
    for k in ks[:-1]:
        prob *= win.c[k]
    return float(prob)
