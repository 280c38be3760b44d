"""
MissBART Controller
Orchestration layer that ties ingestion, fitting, prediction, simulation and
the benchmark studies to configuration and output files.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import structlog

from dataset import (
    Dataset,
    augment,
    ingest_csv,
    level_sidecar_path,
    read_level_dictionary,
    write_dataset_csv,
    write_level_dictionary,
)
from harness import (
    CheckOutcome,
    ExperimentConfig,
    checks_for,
    fetch_bhd_csv,
    load_bhd,
    run_bhd_study,
    run_pattern_mixture_study,
    run_selection_study,
)
from harness.bhd import BHD_SOURCE_URL
from mdm import generate_surface, load_preset
from model import Hyperparams
from posterior import PredictionResult, predict_dataset, write_predictions_csv
from sampler import PosteriorDraws, run_chains
from utils.config import ConfigurationError

logger = structlog.get_logger(__name__)


class MissBARTController:
    """Main controller for missbart operations."""

    def __init__(self, config: dict):
        self.config = config
        self.output_dir = Path(config.get("general", {}).get("output_dir", "./outputs"))
        self.missing_token = config.get("data", {}).get("missing_token", "NA")
        self.response_column = config.get("data", {}).get("response_column", "y")
        logger.info("MissBART controller initialized", output_dir=str(self.output_dir))

    def hyperparams(self, **overrides) -> Hyperparams:
        """Model section of the config with non-None CLI overrides applied."""
        return Hyperparams.from_config(self.config.get("model", {})).with_overrides(**overrides)

    def _output_path(self, path: Optional[str], default_name: str) -> Path:
        return Path(path) if path else self.output_dir / default_name

    # --- fitting and prediction --------------------------------------------

    def fit(
        self,
        train_csv: str,
        model_out: Optional[str] = None,
        hyper: Optional[Hyperparams] = None,
        seed: int = 1,
        nominal: Optional[Dict[str, Sequence[str]]] = None,
        n_chains: Optional[int] = None,
        workers: int = 1,
        diagnostics: Optional[bool] = None,
        debug_checks: Optional[bool] = None,
        response_column: Optional[str] = None,
        missing_token: Optional[str] = None
    ) -> Tuple[PosteriorDraws, Path]:
        """Ingest a training CSV, run the sampler and persist the draws."""
        sampler_cfg = self.config.get("sampler", {})
        hyper = hyper or self.hyperparams()
        n_chains = n_chains or sampler_cfg.get("n_chains", 1)
        diagnostics = sampler_cfg.get("diagnostics", False) if diagnostics is None else diagnostics
        debug_checks = sampler_cfg.get("debug_checks", False) if debug_checks is None else debug_checks

        data = ingest_csv(
            train_csv,
            response_column=response_column or self.response_column,
            missing_token=missing_token or self.missing_token,
            nominal=nominal,
        )
        logger.info(f"Fitting {n_chains} chain(s)", rows=data.n, m=hyper.m,
                    n_burn=hyper.n_burn, n_post=hyper.n_post, seed=seed)
        draws = run_chains(augment(data), hyper, seed, n_chains=n_chains, workers=workers,
                           debug_checks=debug_checks)

        model_path = self._output_path(model_out, f"{Path(train_csv).stem}.model.json.gz")
        draws.save(model_path)
        if data.levels:
            sidecar = write_level_dictionary(data, level_sidecar_path(model_path))
            logger.info("Wrote level dictionary", path=str(sidecar))
        if diagnostics:
            trace_path = model_path.with_name(f"{Path(train_csv).stem}.trace.csv")
            trace_path, moves_path = draws.write_diagnostics_csv(trace_path)
            logger.info("Wrote diagnostics", trace=str(trace_path), moves=str(moves_path))
        return draws, model_path

    def predict(
        self,
        model_path: str,
        csv_path: str,
        out: Optional[str] = None,
        per_draw_out: Optional[str] = None,
        level: Optional[float] = None,
        point: Optional[str] = None,
        levels_path: Optional[str] = None,
        response_column: Optional[str] = None,
        missing_token: Optional[str] = None
    ) -> Tuple[List[PredictionResult], Path]:
        """Predict every row of a CSV with a saved model; a response column is optional."""
        posterior_cfg = self.config.get("posterior", {})
        level = level if level is not None else posterior_cfg.get("level", 0.95)
        point = point or posterior_cfg.get("point_estimate", "mean")
        response_column = response_column or self.response_column

        draws = PosteriorDraws.load(model_path)
        if levels_path is None and level_sidecar_path(model_path).exists():
            levels_path = level_sidecar_path(model_path)
        nominal = read_level_dictionary(levels_path) if levels_path else None

        header = pd.read_csv(csv_path, nrows=0).columns
        data = ingest_csv(
            csv_path,
            response_column=response_column if response_column in header else None,
            missing_token=missing_token or self.missing_token,
            nominal=nominal,
        )
        results = predict_dataset(draws, data, level=level, point=point)

        out_path = self._output_path(out, f"{Path(csv_path).stem}.predictions.csv")
        write_predictions_csv(results, out_path, per_draw_path=per_draw_out)
        return results, out_path

    # --- simulation ---------------------------------------------------------

    def simulate_mdm(
        self,
        scenario: str,
        level: int,
        seed: int = 1,
        out: Optional[str] = None,
        source_csv: Optional[str] = None,
        n: Optional[int] = None
    ) -> Tuple[Dataset, Path]:
        """Write one masked dataset drawn from a scenario preset at a level index."""
        preset = load_preset(scenario)
        if preset.data == "surface":
            surface = preset.surface if n is None else preset.surface.model_copy(update={"n": n})
            base = generate_surface(surface, seed=seed)
            response_column = "y"
        else:
            bhd_cfg = self.config.get("bhd", {})
            response_column = bhd_cfg.get("response_column", "medv")
            base = load_bhd(source_csv or bhd_cfg.get("csv_path"), response_column=response_column,
                            missing_token=self.missing_token)

        masked = preset.apply(base, level, seed)
        out_path = self._output_path(out, f"{scenario}_level{level}_seed{seed}.csv")
        write_dataset_csv(masked, out_path, response_column=response_column, missing_token=self.missing_token)
        logger.info(f"Simulated '{scenario}' at level {level}", rows=masked.n,
                    row_missing_fraction=round(masked.row_missing_fraction(), 4), path=str(out_path))
        return masked, out_path

    # --- benchmark studies --------------------------------------------------

    def experiment_config(self, scenario: str, **overrides) -> ExperimentConfig:
        return ExperimentConfig.from_config(self.config, scenario, **overrides)

    def run_study(self, kind: str, experiment: ExperimentConfig, out_dir: Optional[str] = None) -> Dict[str, Any]:
        """Run a study, write its raw CSV and summary JSON and evaluate acceptance checks."""
        if kind == "selection":
            result = run_selection_study(experiment)
        elif kind == "bhd":
            result = run_bhd_study(experiment)
        elif kind == "illustration":
            result = run_pattern_mixture_study(experiment)
        else:
            raise ConfigurationError(f"Unknown study kind: {kind}")

        target = Path(out_dir) if out_dir else self.output_dir
        raw_csv, summary_json = result.write(
            target / f"{experiment.scenario}.raw.csv",
            target / f"{experiment.scenario}.summary.json",
        )
        checks = checks_for(experiment.scenario, result)
        for check in checks:
            log = logger.info if check.passed else logger.warning
            log(f"Check {'passed' if check.passed else 'FAILED'}: {check.name}", detail=check.detail)

        return {
            "result": result,
            "raw_csv": raw_csv,
            "summary_json": summary_json,
            "checks": checks,
        }

    @staticmethod
    def checks_passed(checks: Sequence[CheckOutcome]) -> bool:
        return all(check.passed for check in checks)

    # --- data download -----------------------------------------------------

    def fetch_bhd(self, dest: Optional[str] = None, url: Optional[str] = None) -> Path:
        bhd_cfg = self.config.get("bhd", {})
        dest = dest or bhd_cfg.get("csv_path") or "data/BostonHousing.csv"
        url = url or bhd_cfg.get("source_url") or BHD_SOURCE_URL
        return fetch_bhd_csv(dest, url)
