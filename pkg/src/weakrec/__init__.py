"""Exact regression operators for weak records of discrete laws, with Monte Carlo cross-checks."""

from .errors import WeakRecordError
from .operator import (
    TruncationWindow,
    apply_A,
    apply_B_poly,
    apply_B_product,
    deviation_vector,
    regression_vector,
)
from .pmf import DiscretePmf, GammaPair, RegressionCoeffs, beta_to_gamma, from_gamma, from_raw, gamma_to_beta, geometric, parse_dist
from .spectral import classify_injectivity, eigen_test, eigenvector, kernel_vector

__all__ = [
    "DiscretePmf",
    "GammaPair",
    "RegressionCoeffs",
    "TruncationWindow",
    "WeakRecordError",
    "apply_A",
    "apply_B_poly",
    "apply_B_product",
    "beta_to_gamma",
    "classify_injectivity",
    "deviation_vector",
    "eigen_test",
    "eigenvector",
    "from_gamma",
    "from_raw",
    "gamma_to_beta",
    "geometric",
    "kernel_vector",
    "parse_dist",
    "regression_vector",
]
