import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def dense_A(p):
    """Explicit matrix of the one-step operator on a finite support (oracle)."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    A = np.zeros((n, n))
    for l in range(n):
        ql = p[l:].sum()
        A[l, l:] = p[l:] / ql
    return A


@pytest.fixture
def uniform3():
    from weakrec.pmf import GammaPair, from_gamma

    return from_gamma(GammaPair(1.0, 0.5))


def z_band(n_checks: int, alpha: float = 0.0027) -> float:
    """Two-sided normal band holding the family-wise false-alarm rate at ``alpha``."""
    from scipy.stats import norm

    return float(norm.isf(alpha / (2 * n_checks)))
