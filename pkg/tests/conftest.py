"""Shared builders for randomized environments used across the test suite."""

import numpy as np
import pytest

from merging_chains import Environment, kernel_from_conductances, lazify


def random_conductance_env(rng, n, horizon, lazy=True, c_min=0.5, c_max=2.0,
                           growth=0.1):
    """Reversible non-decreasing environment from growing dense conductances."""
    c = rng.uniform(c_min, c_max, (n, n))
    c = 0.5 * (c + c.T)
    kernels, measures = [], []
    for _ in range(horizon):
        P, pi = kernel_from_conductances(c)
        kernels.append(lazify(P, 0.5) if lazy else P)
        measures.append(pi)
        inc = rng.uniform(0.0, growth, (n, n))
        c = c + 0.5 * (inc + inc.T)
    return Environment(np.stack(kernels), np.stack(measures))


def random_doubly_stochastic_env(rng, n, horizon):
    """Non-reversible kernels with a growing constant-shape invariant measure."""
    masses = 1.0 + np.cumsum(rng.uniform(0.0, 0.5, horizon))
    measures = np.outer(masses, np.ones(n))
    kernels = []
    for _ in range(horizon):
        K = np.zeros((n, n))
        for w in rng.dirichlet(np.ones(4)):
            K[np.arange(n), rng.permutation(n)] += w
        kernels.append(0.5 * np.eye(n) + 0.5 * K)
    return Environment(np.stack(kernels), measures)


def random_environment(rng, n, horizon):
    """Mix of the two families, for property tests over general environments."""
    if rng.random() < 0.5:
        return random_conductance_env(rng, n, horizon)
    return random_doubly_stochastic_env(rng, n, horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240402)
