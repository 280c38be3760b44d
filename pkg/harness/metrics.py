"""
Evaluation Metrics and Baselines
Out-of-sample error, deterministic seed derivation and the mean-imputation baseline.
"""

import math
from typing import Tuple

import numpy as np
import structlog
from sklearn.impute import SimpleImputer
from sklearn.metrics import mean_squared_error

from dataset import Dataset

logger = structlog.get_logger(__name__)


def oos_rmse(predictions, truths) -> float:
    """Root mean squared error, original response units."""
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    truths = np.asarray(truths, dtype=float).reshape(-1)
    if predictions.shape != truths.shape:
        raise ValueError(f"{predictions.size} predictions for {truths.size} truths")
    if predictions.size == 0:
        raise ValueError("oos_rmse needs at least one prediction")
    return math.sqrt(mean_squared_error(truths, predictions))


def derive_seed(base: int, *keys: int) -> int:
    """Independent 32-bit seed for a purpose identified by ``keys``."""
    sequence = np.random.SeedSequence(entropy=int(base), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1)[0])


def baseline_mean_impute(train: Dataset, test: Dataset) -> Tuple[Dataset, Dataset]:
    """Fill missing cells with training means (modes for nominal columns); masks cleared."""
    if train.column_names != test.column_names:
        raise ValueError("train and test columns differ")

    empty = [train.column_names[j] for j in np.flatnonzero(train.missing_mask.all(axis=0))]
    if empty:
        logger.warning("Columns fully missing in training; imputing 0", columns=empty)

    nominal = list(train.nominal_columns)
    numeric = [j for j in range(train.p) if j not in set(nominal)]
    X_train = train.masked_covariates()
    X_test = test.masked_covariates()
    filled_train = X_train.copy()
    filled_test = X_test.copy()
    for strategy, columns in (("mean", numeric), ("most_frequent", nominal)):
        if not columns:
            continue
        imputer = SimpleImputer(strategy=strategy, keep_empty_features=True)
        filled_train[:, columns] = imputer.fit_transform(X_train[:, columns])
        filled_test[:, columns] = imputer.transform(X_test[:, columns])

    def rebuild(source: Dataset, covariates: np.ndarray) -> Dataset:
        return Dataset(
            covariates=covariates,
            missing_mask=np.zeros_like(covariates, dtype=bool),
            response=source.response,
            column_names=source.column_names,
            levels=source.levels,
        )

    return rebuild(train, filled_train), rebuild(test, filled_test)
