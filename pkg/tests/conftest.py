import numpy as np
import pytest

from mosh.sparse import CoverageObjective


def random_objective(rng, n, m, integral=False):
    """A coverage objective whose columns each reach exactly 1."""
    if integral:
        G = rng.integers(0, 4, size=(n, m)) / 3.0
    else:
        G = rng.random((n, m))
    G[rng.integers(0, n, size=m), np.arange(m)] = 1.0
    G = G / G.max(axis=0)
    return CoverageObjective(G, np.arange(n), tuple(range(m)), np.zeros(m), np.ones(m))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
