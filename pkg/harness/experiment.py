"""
Benchmark Experiments
Replicated fits on simulated and Boston Housing data under missingness scenarios.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Sequence, Tuple, get_args

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from dataset import Dataset, augment
from mdm import ScenarioPreset, generate_surface, load_preset, true_conditional_mean
from model import Hyperparams
from posterior import ci_width_report, predict, predict_draw_matrix
from sampler import run_chain
from utils.config import ConfigurationError

from .bhd import BHD_RESPONSE, load_bhd
from .metrics import baseline_mean_impute, derive_seed, oos_rmse
from .results import MDM_OFF_TEST, MISSING_TEST, IllustrationResult, ScenarioResult

logger = structlog.get_logger(__name__)

# seed purposes
SURFACE, MASK, SPLIT, CHAIN, OFFSET = range(5)

Method = Literal["all_cases", "complete_case", "mean_impute"]
METHODS: Tuple[str, ...] = get_args(Method)

# methods run when none are requested, per data source
DEFAULT_BASELINES = {
    "surface": ("all_cases", "complete_case"),
    "bhd": ("all_cases", "mean_impute"),
}

ILLUSTRATION_POINTS = {
    "[0,0,0]": (0.0, 0.0, 0.0),
    "[0,.,0]": (0.0, None, 0.0),
    "[0,0,.]": (0.0, 0.0, None),
    "[0,.,.]": (0.0, None, None),
}

# (observed, masked) point pairs whose interval widths are compared
WIDTH_PAIRS = (("[0,0,0]", "[0,.,0]"), ("[0,0,.]", "[0,.,.]"))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: str
    levels: Optional[List[int]] = None
    replicates: int = Field(50, ge=1)
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    n_train: int = Field(250, ge=2)
    n_test: int = Field(250, ge=1)
    baselines: Optional[List[Method]] = None
    hyper: Hyperparams = Field(default_factory=Hyperparams)
    seed_base: int = 1
    workers: int = Field(1, ge=1)
    credible_level: float = Field(0.95, gt=0.0, lt=1.0)
    bhd_csv: Optional[str] = None
    response_column: str = BHD_RESPONSE

    @classmethod
    def from_config(cls, config: Mapping[str, Any], scenario: str, **overrides) -> "ExperimentConfig":
        """Build from the ``harness``/``model``/``bhd`` config sections plus non-None overrides."""
        harness = config.get("harness", {})
        hyper = Hyperparams.from_config(config.get("model", {}))
        if harness.get("full_fidelity"):
            hyper = hyper.full_fidelity()
        else:
            hyper = hyper.with_overrides(n_burn=harness.get("sweep_n_burn"), n_post=harness.get("sweep_n_post"))

        values: Dict[str, Any] = {
            "scenario": scenario,
            "replicates": harness.get("replicates", 50),
            "train_fraction": harness.get("train_fraction", 0.8),
            "n_train": harness.get("n_train", 250),
            "n_test": harness.get("n_test", 250),
            "seed_base": harness.get("seed_base", 1),
            "baselines": harness.get("baselines") or None,
            "workers": harness.get("workers", 1),
            "credible_level": config.get("posterior", {}).get("level", 0.95),
            "bhd_csv": config.get("bhd", {}).get("csv_path") or None,
            "response_column": config.get("bhd", {}).get("response_column", BHD_RESPONSE),
            "hyper": hyper,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def resolve_baselines(self, preset: ScenarioPreset) -> List[str]:
        """Requested methods, else the defaults for the preset's data source."""
        if self.baselines:
            return list(self.baselines)
        return list(DEFAULT_BASELINES[preset.data])

    def resolve_levels(self, preset: ScenarioPreset) -> List[int]:
        levels = list(range(preset.n_levels)) if self.levels is None else list(self.levels)
        bad = [level for level in levels if not 0 <= level < preset.n_levels]
        if bad:
            raise ConfigurationError(f"scenario '{preset.name}' has levels 0..{preset.n_levels - 1}, got {bad}")
        return levels


def _fit_point_predictions(
    train: Dataset,
    tests: Sequence[Dataset],
    hyper: Hyperparams,
    seed: int
) -> List[np.ndarray]:
    """Posterior-mean predictions of one fit on each test set."""
    draws = run_chain(augment(train), hyper, seed)
    return [predict_draw_matrix(draws, t.covariates, t.missing_mask).mean(axis=0) for t in tests]


def _split_rows(n: int, n_train: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _record(config: ExperimentConfig, preset: ScenarioPreset, level: int, replicate: int, method: str,
            cell: str, rmse: float, reference: float, fraction: float) -> Dict[str, Any]:
    available = bool(np.isfinite(rmse))
    return {
        "scenario": config.scenario,
        "level": level,
        "level_value": float(preset.levels[level]),
        "replicate": replicate,
        "method": method,
        "cell": cell,
        "available": available,
        "rmse": float(rmse) if available else float("nan"),
        "ratio": float(rmse / reference) if available and reference > 0 else float("nan"),
        "row_missing_fraction": fraction,
    }


def _tagged_replicate(task: Callable, *args):
    """Run one replicate task with its scenario and replicate index bound to every log line."""
    config, replicate = args[0], args[-1]
    with structlog.contextvars.bound_contextvars(scenario=config.scenario, replicate=replicate):
        return task(*args)


def _run_tasks(task: Callable, arguments: List[Tuple], workers: int) -> List:
    if workers <= 1:
        return [_tagged_replicate(task, *args) for args in arguments]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_tagged_replicate, [task] * len(arguments), *zip(*arguments)))


# --- selection-model study -------------------------------------------------

def _selection_replicate(config: ExperimentConfig, preset: ScenarioPreset, replicate: int) -> List[Dict[str, Any]]:
    seed = config.seed_base + replicate
    n_total = config.n_train + config.n_test
    surface = preset.surface.model_copy(update={"n": n_total})

    complete = generate_surface(surface, seed=derive_seed(seed, SURFACE))
    train_rows, test_rows = _split_rows(n_total, config.n_train, derive_seed(seed, SPLIT))

    reference_test = complete.subset(test_rows)
    (reference_pred,) = _fit_point_predictions(
        complete.subset(train_rows), [reference_test], config.hyper, derive_seed(seed, CHAIN, 0, 0)
    )
    reference = oos_rmse(reference_pred, reference_test.response)

    records = []
    for level in config.resolve_levels(preset):
        masked = preset.apply(complete, level, derive_seed(seed, MASK), derive_seed(seed, OFFSET))
        train = masked.subset(train_rows)
        test = masked.subset(test_rows)
        test_off = test.without_missingness()
        fraction = masked.row_missing_fraction()

        for method_index, method in enumerate(config.resolve_baselines(preset), start=1):
            chain_seed = derive_seed(seed, CHAIN, level + 1, method_index)
            if method == "all_cases":
                fit_train = train
            elif method == "complete_case":
                fit_train = train.complete_cases() if train.complete_case_rows().size >= 2 else None
            else:
                fit_train, imputed_test = baseline_mean_impute(train, test)
                (pred,) = _fit_point_predictions(fit_train, [imputed_test], config.hyper, chain_seed)
                records.append(_record(config, preset, level, replicate, method, MISSING_TEST,
                                       oos_rmse(pred, test.response), reference, fraction))
                continue

            if fit_train is None:
                logger.warning("Too few complete cases; cell unavailable",
                               level=level)
                for cell in (MISSING_TEST, MDM_OFF_TEST):
                    records.append(_record(config, preset, level, replicate, method, cell,
                                           float("nan"), reference, fraction))
                continue

            pred_missing, pred_off = _fit_point_predictions(fit_train, [test, test_off], config.hyper, chain_seed)
            records.append(_record(config, preset, level, replicate, method, MISSING_TEST,
                                   oos_rmse(pred_missing, test.response), reference, fraction))
            records.append(_record(config, preset, level, replicate, method, MDM_OFF_TEST,
                                   oos_rmse(pred_off, test_off.response), reference, fraction))

    logger.info("Replicate finished", records=len(records))
    return records


def run_selection_study(config: ExperimentConfig) -> ScenarioResult:
    """Four train/test cells per level on the generated surface, relative to a missing-free fit."""
    preset = load_preset(config.scenario)
    if preset.data != "surface":
        raise ConfigurationError(f"scenario '{preset.name}' is not a generated-surface scenario")

    logger.info(f"Running selection study '{preset.name}'", replicates=config.replicates,
                levels=config.resolve_levels(preset), baselines=config.resolve_baselines(preset),
                workers=config.workers)
    arguments = [(config, preset, r) for r in range(config.replicates)]
    per_replicate = _run_tasks(_selection_replicate, arguments, config.workers)
    return ScenarioResult(scenario=config.scenario, records=[r for batch in per_replicate for r in batch])


# --- Boston Housing study --------------------------------------------------

def _bhd_replicate(config: ExperimentConfig, preset: ScenarioPreset, base: Dataset,
                   replicate: int) -> List[Dict[str, Any]]:
    seed = config.seed_base + replicate
    n_train = int(round(config.train_fraction * base.n))
    train_rows, test_rows = _split_rows(base.n, n_train, derive_seed(seed, SPLIT))

    reference_test = base.subset(test_rows)
    (reference_pred,) = _fit_point_predictions(
        base.subset(train_rows), [reference_test], config.hyper, derive_seed(seed, CHAIN, 0, 0)
    )
    reference = oos_rmse(reference_pred, reference_test.response)

    records = []
    for level in config.resolve_levels(preset):
        masked = preset.apply(base, level, derive_seed(seed, MASK), derive_seed(seed, OFFSET))
        train = masked.subset(train_rows)
        test = masked.subset(test_rows)
        fraction = masked.row_missing_fraction()

        for method_index, method in enumerate(config.resolve_baselines(preset), start=1):
            chain_seed = derive_seed(seed, CHAIN, level + 1, method_index)
            if method == "mean_impute":
                fit_train, fit_test = baseline_mean_impute(train, test)
            elif method == "complete_case":
                if train.complete_case_rows().size < 2:
                    records.append(_record(config, preset, level, replicate, method, MISSING_TEST,
                                           float("nan"), reference, fraction))
                    continue
                fit_train, fit_test = train.complete_cases(), test
            else:
                fit_train, fit_test = train, test
            (pred,) = _fit_point_predictions(fit_train, [fit_test], config.hyper, chain_seed)
            records.append(_record(config, preset, level, replicate, method, MISSING_TEST,
                                   oos_rmse(pred, test.response), reference, fraction))

    logger.info("Replicate finished", records=len(records))
    return records


def run_bhd_study(config: ExperimentConfig, base: Optional[Dataset] = None) -> ScenarioResult:
    """Missingness scenarios on Boston Housing with an 80/20 split, relative to a full-data fit."""
    preset = load_preset(config.scenario)
    if preset.data != "bhd":
        raise ConfigurationError(f"scenario '{preset.name}' is not a Boston Housing scenario")
    if base is None:
        base = load_bhd(config.bhd_csv, response_column=config.response_column)
    for spec in preset.mechanisms:
        for name in list(spec.targets) + spec.referenced_columns():
            if name not in base.column_names:
                raise ConfigurationError(
                    f"column '{name}' used by scenario '{preset.name}' is not in the data; "
                    f"available: {', '.join(base.column_names)}"
                )

    logger.info(f"Running Boston Housing study '{preset.name}'", replicates=config.replicates,
                levels=config.resolve_levels(preset), baselines=config.resolve_baselines(preset),
                workers=config.workers)
    arguments = [(config, preset, base, r) for r in range(config.replicates)]
    per_replicate = _run_tasks(_bhd_replicate, arguments, config.workers)
    return ScenarioResult(scenario=config.scenario, records=[r for batch in per_replicate for r in batch])


# --- credible-interval illustration ----------------------------------------

def _illustration_replicate(config: ExperimentConfig, preset: ScenarioPreset,
                            replicate: int) -> List[Dict[str, Any]]:
    seed = config.seed_base + replicate
    complete = generate_surface(preset.surface, seed=derive_seed(seed, SURFACE))
    masked = preset.apply(complete, 0, derive_seed(seed, MASK), derive_seed(seed, OFFSET))
    draws = run_chain(augment(masked), config.hyper, derive_seed(seed, CHAIN))

    mu_b = preset.offsets[0].mu_b if preset.offsets else 0.0
    rho2 = preset.surface.rho2
    labels = list(ILLUSTRATION_POINTS)
    covariates = np.array([[0.0 if v is None else v for v in ILLUSTRATION_POINTS[k]] for k in labels])
    mask = np.array([[v is None for v in ILLUSTRATION_POINTS[k]] for k in labels])
    results = predict(draws, None, covariates, mask, level=config.credible_level)

    records = []
    for label, result in zip(labels, results):
        truth = true_conditional_mean(ILLUSTRATION_POINTS[label], mu_b=mu_b, rho2=rho2)
        records.append({
            "scenario": config.scenario,
            "replicate": replicate,
            "point": label,
            "truth": truth,
            "estimate": result.point,
            "ci_lower": result.ci_lower,
            "ci_upper": result.ci_upper,
            "width": result.width,
            "covered": bool(result.covers(truth)),
            "row_missing_fraction": masked.row_missing_fraction(),
        })
    by_label = dict(zip(labels, results))
    widths = ci_width_report([(by_label[a], by_label[b]) for a, b in WIDTH_PAIRS])
    logger.info("Replicate finished",
                covered=sum(r["covered"] for r in records),
                width_ratios=[round(w.ratio, 3) for w in widths])
    return records


def run_pattern_mixture_study(config: ExperimentConfig) -> IllustrationResult:
    """Credible-interval coverage and width at the four illustration test points."""
    preset = load_preset(config.scenario)
    if preset.data != "surface" or not preset.offsets:
        raise ConfigurationError(f"scenario '{preset.name}' is not a pattern-mixture surface scenario")

    logger.info(f"Running pattern-mixture illustration '{preset.name}'",
                replicates=config.replicates, n_burn=config.hyper.n_burn, n_post=config.hyper.n_post)
    arguments = [(config, preset, r) for r in range(config.replicates)]
    per_replicate = _run_tasks(_illustration_replicate, arguments, config.workers)
    return IllustrationResult(scenario=config.scenario, records=[r for batch in per_replicate for r in batch])
