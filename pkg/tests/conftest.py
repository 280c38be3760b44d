"""
Shared fixtures: small datasets and short chains.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dataset import Dataset  # noqa: E402
from model import Hyperparams  # noqa: E402


def make_dataset(X, y, mask=None, names=None, levels=None) -> Dataset:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    mask = np.zeros(X.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    names = names or tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return Dataset(covariates=X, missing_mask=mask, response=y, column_names=names, levels=levels or {})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_hyper():
    return Hyperparams(m=5, n_burn=20, n_post=20)


@pytest.fixture
def step_data(rng):
    """y is a step in x1 with a quarter of x1 missing; missing rows have their own mean."""
    n = 120
    x1 = rng.uniform(0, 1, n)
    x2 = rng.normal(size=n)
    mask = np.zeros((n, 2), dtype=bool)
    mask[rng.choice(n, n // 4, replace=False), 0] = True
    y = np.where(x1 > 0.5, 2.0, -2.0)
    y = np.where(mask[:, 0], 5.0, y) + 0.1 * rng.normal(size=n)
    return make_dataset(np.column_stack([x1, x2]), y, mask)
