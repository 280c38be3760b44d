# Posterior Module
from .prediction import (
    PredictionResult,
    WidthComparison,
    predict,
    predict_dataset,
    predict_draw_matrix,
    summarize_draws,
    ci_width_report,
    write_predictions_csv,
)

__all__ = [
    "PredictionResult",
    "WidthComparison",
    "predict",
    "predict_dataset",
    "predict_draw_matrix",
    "summarize_draws",
    "ci_width_report",
    "write_predictions_csv",
]
