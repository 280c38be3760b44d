# Harness Module
from .metrics import oos_rmse, derive_seed, baseline_mean_impute
from .results import ScenarioResult, IllustrationResult
from .experiment import (
    ExperimentConfig,
    ILLUSTRATION_POINTS,
    METHODS,
    run_selection_study,
    run_bhd_study,
    run_pattern_mixture_study,
)
from .acceptance import CheckOutcome, checks_for
from .bhd import BHD_COLUMNS, BHD_SOURCE_URL, fetch_bhd_csv, load_bhd

__all__ = [
    "oos_rmse",
    "derive_seed",
    "baseline_mean_impute",
    "ScenarioResult",
    "IllustrationResult",
    "ExperimentConfig",
    "ILLUSTRATION_POINTS",
    "METHODS",
    "run_selection_study",
    "run_bhd_study",
    "run_pattern_mixture_study",
    "CheckOutcome",
    "checks_for",
    "BHD_COLUMNS",
    "BHD_SOURCE_URL",
    "fetch_bhd_csv",
    "load_bhd",
]
