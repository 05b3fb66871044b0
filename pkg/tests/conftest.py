import numpy as np
import pytest

from betanmf import FactorPair, MajorizerAnchor

BETA_GRID = (-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0)


def random_instance(rng, n_rows=5, n_cols=4, rank=3, low=0.1, high=3.0):
    """Strictly positive (data, w, h) triple, valid for every beta."""
    v = rng.uniform(low, high, size=(n_rows, n_cols))
    w = rng.uniform(low, 2.0, size=(n_rows, rank))
    h = rng.uniform(low, 2.0, size=(rank, n_cols))
    return v, w, h


def random_anchor(rng, n_rows=5, n_cols=4, rank=3):
    v, w, h = random_instance(rng, n_rows, n_cols, rank)
    return v, MajorizerAnchor.from_factors(w, h)


def random_pair(rng, n_rows=5, n_cols=4, rank=3):
    _, w, h = random_instance(rng, n_rows, n_cols, rank)
    return FactorPair(w, h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
