"""Shared fixtures for the multilinear PageRank tests."""

import numpy as np
import pytest

from multilinear_pagerank.datagen import gen_synthetic
from multilinear_pagerank.problem import PageRankProblem


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(20240613)


@pytest.fixture
def synthetic_problem():
    """Factory for seeded synthetic third-order problems."""

    def make(n: int = 10, alpha: float = 0.4, seed: int = 0) -> PageRankProblem:
        tensor, v = gen_synthetic(n, seed)
        return PageRankProblem(tensor, alpha, v)

    return make


def random_stochastic_tensor(rng, n: int, m: int) -> np.ndarray:
    """Dense ``n x ... x n`` array, nonnegative, summing to one over axis 0."""
    tensor = rng.random((n,) * m)
    return tensor / tensor.sum(axis=0, keepdims=True)
