"""Shared helpers for the test suite."""

import numpy as np
import pytest

from crossdiff import CoefficientMatrix


def random_coefficients(rng, n, lo=0.2, hi=2.0):
    """Random strictly positive symmetric coefficient matrix for n species."""
    m = n + 1
    vals = rng.uniform(lo, hi, size=(m, m))
    K = np.triu(vals, 1)
    K = K + K.T
    return CoefficientMatrix(K)


def random_cosine_profile(rng, n, x):
    """Random smooth strictly interior profile on (len(x), n) cells.

    Each species gets mean m_i and amplitude a_i with sum(m) + |sum(a)| < 1
    and m_i - |a_i| > 0, so the data stays inside the simplex.
    """
    means = rng.dirichlet(np.ones(n + 1))[:n] * 0.9 + 0.02
    amps = (rng.uniform(-0.5, 0.5, size=n)) * means
    total_max = means.sum() + np.abs(amps.sum())
    if total_max >= 0.98:
        scale = 0.98 / total_max
        means, amps = means * scale, amps * scale
    phase = np.cos(np.pi * x / (x[-1] + x[0]))
    return means[None, :] + phase[:, None] * amps[None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
