"""
Posterior Prediction
Drop new rows down every kept ensemble and summarize the draws.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from dataset import Dataset, DatasetError, ResponseTransform, augment_rows
from sampler import PosteriorDraws
from trees import RoutingError

logger = structlog.get_logger(__name__)

POINT_ESTIMATES = ("mean", "median")


@dataclass
class PredictionResult:
    """Posterior summary for one row, in original response units."""
    row_id: int
    point: float
    ci_lower: float
    ci_upper: float
    per_draw: np.ndarray
    median: float

    @property
    def width(self) -> float:
        return self.ci_upper - self.ci_lower

    def covers(self, value: float) -> bool:
        return self.ci_lower <= value <= self.ci_upper


@dataclass(frozen=True)
class WidthComparison:
    observed_width: float
    masked_width: float
    ratio: float


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"credible level must lie in (0, 1), got {level}")


def predict_draw_matrix(
    draws: PosteriorDraws,
    covariates: np.ndarray,
    mask: np.ndarray,
    transform: Optional[ResponseTransform] = None
) -> np.ndarray:
    """n_draws x n_rows matrix of summed tree outputs in original units."""
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    expected = len(draws.column_names)
    if covariates.shape[1] != expected:
        raise RoutingError(f"rows have {covariates.shape[1]} columns, model was fit on {expected}")
    matrix, augmented_mask = augment_rows(covariates, mask, draws.dummy_map)

    scaled = np.empty((draws.n_post, matrix.shape[0]))
    for i, ensemble in enumerate(draws.ensembles):
        scaled[i] = ensemble.predict(matrix, augmented_mask)
    transform = transform or draws.transform
    return transform.inverse(scaled)


def summarize_draws(
    per_draw: np.ndarray,
    level: float = 0.95,
    point: str = "mean",
    row_ids: Optional[Sequence[int]] = None
) -> List[PredictionResult]:
    """Point estimate and equal-tailed credible interval for each column of ``per_draw``."""
    _check_level(level)
    if point not in POINT_ESTIMATES:
        raise ValueError(f"point estimate must be one of {POINT_ESTIMATES}, got {point!r}")
    per_draw = np.atleast_2d(per_draw)
    lower, upper = np.quantile(per_draw, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
    median = np.median(per_draw, axis=0)
    centre = per_draw.mean(axis=0) if point == "mean" else median
    row_ids = range(per_draw.shape[1]) if row_ids is None else row_ids
    return [
        PredictionResult(row_id=int(r), point=float(centre[i]), ci_lower=float(lower[i]),
                         ci_upper=float(upper[i]), per_draw=per_draw[:, i].copy(),
                         median=float(median[i]))
        for i, r in enumerate(row_ids)
    ]


def predict(
    draws: PosteriorDraws,
    transform: Optional[ResponseTransform],
    covariates: np.ndarray,
    mask: np.ndarray,
    level: float = 0.95,
    point: str = "mean"
) -> List[PredictionResult]:
    """Posterior predictions for rows carrying their own missingness masks."""
    _check_level(level)
    per_draw = predict_draw_matrix(draws, covariates, mask, transform)
    return summarize_draws(per_draw, level=level, point=point)


def predict_dataset(
    draws: PosteriorDraws,
    dataset: Dataset,
    level: float = 0.95,
    point: str = "mean"
) -> List[PredictionResult]:
    """``predict`` for a Dataset whose columns must match the training schema by name."""
    if tuple(dataset.column_names) != tuple(draws.column_names):
        raise DatasetError(
            f"columns {list(dataset.column_names)} do not match the model's {list(draws.column_names)}"
        )
    return predict(draws, None, dataset.covariates, dataset.missing_mask, level=level, point=point)


def ci_width_report(pairs: Sequence[Tuple[PredictionResult, PredictionResult]]) -> List[WidthComparison]:
    """Masked-row over observed-row interval width for (observed, masked) result pairs."""
    report = []
    for observed, masked in pairs:
        ratio = masked.width / observed.width if observed.width > 0 else float("inf")
        report.append(WidthComparison(observed_width=observed.width, masked_width=masked.width, ratio=ratio))
    return report


def write_predictions_csv(
    results: Sequence[PredictionResult],
    path,
    per_draw_path=None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "row_id": [r.row_id for r in results],
        "point": [r.point for r in results],
        "median": [r.median for r in results],
        "ci_lower": [r.ci_lower for r in results],
        "ci_upper": [r.ci_upper for r in results],
    })
    frame.to_csv(path, index=False)

    if per_draw_path:
        per_draw = pd.DataFrame(
            np.column_stack([r.per_draw for r in results]),
            columns=[f"row_{r.row_id}" for r in results],
        )
        per_draw.index.name = "draw"
        per_draw.to_csv(per_draw_path)
    logger.info(f"Wrote {len(results)} predictions", path=str(path))
    return path
