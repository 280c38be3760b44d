"""
Benchmark Results
Raw per-replicate records, their aggregates and on-disk emission.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

logger = structlog.get_logger(__name__)

RECORD_COLUMNS = [
    "scenario", "level", "level_value", "replicate", "method", "cell",
    "available", "rmse", "ratio", "row_missing_fraction",
]
MISSING_TEST = "missing_test"
MDM_OFF_TEST = "mdm_off_test"

ILLUSTRATION_COLUMNS = [
    "scenario", "replicate", "point", "truth", "estimate",
    "ci_lower", "ci_upper", "width", "covered", "row_missing_fraction",
]


def _standard_error(values: pd.Series) -> float:
    values = values.dropna()
    if len(values) < 2:
        return float("nan")
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def _json_number(value) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class ScenarioResult:
    """oosRMSE records, one per (level, replicate, method, test cell)."""
    scenario: str
    records: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.records, columns=RECORD_COLUMNS)
        return frame.sort_values(["level", "replicate", "method", "cell"], kind="mergesort").reset_index(drop=True)

    def aggregate(self) -> pd.DataFrame:
        """Mean and standard error per (level, method, cell) over available replicates."""
        frame = self.to_frame()
        rows = []
        for (level, method, cell), group in frame.groupby(["level", "method", "cell"], sort=True):
            available = group[group["available"]]
            rows.append({
                "level": int(level),
                "level_value": float(group["level_value"].iloc[0]),
                "method": method,
                "cell": cell,
                "n": int(len(available)),
                "mean_rmse": float(available["rmse"].mean()) if len(available) else float("nan"),
                "se_rmse": _standard_error(available["rmse"]),
                "mean_ratio": float(available["ratio"].mean()) if len(available) else float("nan"),
                "se_ratio": _standard_error(available["ratio"]),
                "row_missing_fraction": float(group["row_missing_fraction"].mean()),
            })
        return pd.DataFrame(rows)

    def cell_stats(self, level: int, method: str, cell: str) -> Tuple[float, float]:
        """(mean, standard error) of the oosRMSE in one cell."""
        frame = self.to_frame()
        selected = frame[(frame["level"] == level) & (frame["method"] == method)
                         & (frame["cell"] == cell) & frame["available"]]
        if selected.empty:
            return float("nan"), float("nan")
        return float(selected["rmse"].mean()), _standard_error(selected["rmse"])

    def level_missing_fractions(self) -> Dict[int, float]:
        frame = self.to_frame()
        return {int(k): float(v) for k, v in frame.groupby("level")["row_missing_fraction"].mean().items()}

    def summary(self) -> Dict[str, Any]:
        aggregate = self.aggregate()
        levels = []
        for level, group in aggregate.groupby("level", sort=True):
            levels.append({
                "level": int(level),
                "level_value": float(group["level_value"].iloc[0]),
                "row_missing_fraction": float(group["row_missing_fraction"].mean()),
                "cells": [
                    {
                        "method": row.method,
                        "cell": row.cell,
                        "n": int(row.n),
                        "mean_rmse": _json_number(row.mean_rmse),
                        "se_rmse": _json_number(row.se_rmse),
                        "mean_ratio": _json_number(row.mean_ratio),
                        "se_ratio": _json_number(row.se_ratio),
                    }
                    for row in group.itertuples(index=False)
                ],
            })
        return {"scenario": self.scenario, "levels": levels}

    def write(self, raw_csv, summary_json) -> Tuple[Path, Path]:
        raw_csv, summary_json = Path(raw_csv), Path(summary_json)
        raw_csv.parent.mkdir(parents=True, exist_ok=True)
        summary_json.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(raw_csv, index=False)
        with open(summary_json, "w", encoding="utf-8") as f:
            json.dump(self.summary(), f, indent=2)
        logger.info("Wrote benchmark results", scenario=self.scenario,
                    raw=str(raw_csv), summary=str(summary_json), records=len(self.records))
        return raw_csv, summary_json


@dataclass
class IllustrationResult:
    """Credible-interval coverage and width per test point and replicate."""
    scenario: str
    records: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.records, columns=ILLUSTRATION_COLUMNS)
        return frame.sort_values(["point", "replicate"], kind="mergesort").reset_index(drop=True)

    def aggregate(self) -> pd.DataFrame:
        frame = self.to_frame()
        rows = []
        for point, group in frame.groupby("point", sort=False):
            rows.append({
                "point": point,
                "truth": float(group["truth"].iloc[0]),
                "replicates": int(len(group)),
                "covered": int(group["covered"].sum()),
                "mean_estimate": float(group["estimate"].mean()),
                "mean_width": float(group["width"].mean()),
                "se_width": _standard_error(group["width"]),
            })
        return pd.DataFrame(rows)

    def mean_width(self, point: str) -> float:
        frame = self.to_frame()
        return float(frame.loc[frame["point"] == point, "width"].mean())

    def summary(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "points": [
                {k: (_json_number(v) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()}
                for row in self.aggregate().to_dict(orient="records")
            ],
        }

    def write(self, raw_csv, summary_json) -> Tuple[Path, Path]:
        raw_csv, summary_json = Path(raw_csv), Path(summary_json)
        raw_csv.parent.mkdir(parents=True, exist_ok=True)
        summary_json.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(raw_csv, index=False)
        with open(summary_json, "w", encoding="utf-8") as f:
            json.dump(self.summary(), f, indent=2, default=int)
        logger.info("Wrote illustration results", raw=str(raw_csv), summary=str(summary_json))
        return raw_csv, summary_json
