"""
Posterior Draws
Kept ensembles from a chain plus the traces and counters needed to judge it.
"""

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from dataset import ResponseTransform
from trees import Ensemble

logger = structlog.get_logger(__name__)

MOVES = ("grow", "prune", "change")


def _zero_counts() -> Dict[str, int]:
    return {move: 0 for move in MOVES}


@dataclass
class PosteriorDraws:
    """Post-burn-in ensembles; the traces cover every iteration, burn-in included."""
    ensembles: List[Ensemble]
    transform: ResponseTransform
    column_names: Tuple[str, ...]
    dummy_map: Tuple[int, ...]
    n_burn: int
    sigma_trace: np.ndarray
    depth_trace: np.ndarray
    leaves_trace: np.ndarray
    proposed: Dict[str, int] = field(default_factory=_zero_counts)
    accepted: Dict[str, int] = field(default_factory=_zero_counts)
    nonfinite_rejections: int = 0
    n_chains: int = 1

    def __post_init__(self):
        if not self.ensembles:
            raise ValueError("posterior draws need at least one kept iteration")
        self.column_names = tuple(self.column_names)
        self.dummy_map = tuple(int(j) for j in self.dummy_map)
        self.sigma_trace = np.asarray(self.sigma_trace, dtype=float)
        self.depth_trace = np.asarray(self.depth_trace, dtype=float)
        self.leaves_trace = np.asarray(self.leaves_trace, dtype=float)

    @property
    def n_post(self) -> int:
        return len(self.ensembles)

    @property
    def m(self) -> int:
        return self.ensembles[0].m

    @property
    def n_columns(self) -> int:
        return len(self.column_names) + len(self.dummy_map)

    @property
    def sigma_sq(self) -> np.ndarray:
        """Kept noise variances, scaled-response units."""
        return np.array([e.sigma_sq for e in self.ensembles])

    def acceptance_rates(self) -> Dict[str, float]:
        return {
            move: (self.accepted[move] / self.proposed[move]) if self.proposed[move] else 0.0
            for move in MOVES
        }

    @classmethod
    def pool(cls, chains: Sequence["PosteriorDraws"]) -> "PosteriorDraws":
        """Concatenate chains in the given order."""
        if not chains:
            raise ValueError("nothing to pool")
        first = chains[0]
        for other in chains[1:]:
            if other.column_names != first.column_names or other.dummy_map != first.dummy_map:
                raise ValueError("chains were fit on different column layouts")
        return cls(
            ensembles=[e for chain in chains for e in chain.ensembles],
            transform=first.transform,
            column_names=first.column_names,
            dummy_map=first.dummy_map,
            n_burn=first.n_burn,
            sigma_trace=np.concatenate([c.sigma_trace for c in chains]),
            depth_trace=np.concatenate([c.depth_trace for c in chains]),
            leaves_trace=np.concatenate([c.leaves_trace for c in chains]),
            proposed={move: sum(c.proposed[move] for c in chains) for move in MOVES},
            accepted={move: sum(c.accepted[move] for c in chains) for move in MOVES},
            nonfinite_rejections=sum(c.nonfinite_rejections for c in chains),
            n_chains=sum(c.n_chains for c in chains),
        )

    # --- persistence -------------------------------------------------------

    def to_dict(self) -> Dict:
        return {
            "transform": self.transform.to_dict(),
            "column_names": list(self.column_names),
            "dummy_map": list(self.dummy_map),
            "n_burn": self.n_burn,
            "n_chains": self.n_chains,
            "sigma_trace": self.sigma_trace.tolist(),
            "depth_trace": self.depth_trace.tolist(),
            "leaves_trace": self.leaves_trace.tolist(),
            "proposed": dict(self.proposed),
            "accepted": dict(self.accepted),
            "nonfinite_rejections": self.nonfinite_rejections,
            "ensembles": [e.to_dict() for e in self.ensembles],
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "PosteriorDraws":
        return cls(
            ensembles=[Ensemble.from_dict(e) for e in payload["ensembles"]],
            transform=ResponseTransform.from_dict(payload["transform"]),
            column_names=tuple(payload["column_names"]),
            dummy_map=tuple(payload["dummy_map"]),
            n_burn=int(payload["n_burn"]),
            sigma_trace=payload["sigma_trace"],
            depth_trace=payload["depth_trace"],
            leaves_trace=payload["leaves_trace"],
            proposed={k: int(v) for k, v in payload["proposed"].items()},
            accepted={k: int(v) for k, v in payload["accepted"].items()},
            nonfinite_rejections=int(payload["nonfinite_rejections"]),
            n_chains=int(payload.get("n_chains", 1)),
        )

    def save(self, path) -> Path:
        """Write JSON, gzipped when the file name ends in ``.gz``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.to_dict())
        if path.suffix == ".gz":
            with gzip.open(path, "wt", encoding="utf-8") as f:
                f.write(text)
        else:
            path.write_text(text, encoding="utf-8")
        logger.info(f"Saved {self.n_post} posterior draws", path=str(path))
        return path

    @classmethod
    def load(cls, path) -> "PosteriorDraws":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Model file not found: {path}")
        if path.suffix == ".gz":
            with gzip.open(path, "rt", encoding="utf-8") as f:
                payload = json.load(f)
        else:
            payload = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(payload)

    # --- diagnostics -------------------------------------------------------

    def trace_frame(self) -> pd.DataFrame:
        iterations = np.arange(self.sigma_trace.size)
        per_chain = self.sigma_trace.size // self.n_chains
        return pd.DataFrame({
            "chain": iterations // per_chain,
            "iteration": iterations % per_chain,
            "sigma_sq": self.transform.inverse_scale(np.sqrt(self.sigma_trace)) ** 2,
            "mean_depth": self.depth_trace,
            "mean_leaves": self.leaves_trace,
            "kept": (iterations % per_chain) >= self.n_burn,
        })

    def moves_frame(self) -> pd.DataFrame:
        rates = self.acceptance_rates()
        return pd.DataFrame({
            "move": list(MOVES),
            "proposed": [self.proposed[m] for m in MOVES],
            "accepted": [self.accepted[m] for m in MOVES],
            "acceptance_rate": [rates[m] for m in MOVES],
        })

    def write_diagnostics_csv(self, path, moves_path: Optional[Path] = None) -> Tuple[Path, Path]:
        """Write the per-iteration trace (sigma^2 in response units) and move counters."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        moves_path = Path(moves_path) if moves_path else path.with_name(f"{path.stem}.moves.csv")
        self.trace_frame().to_csv(path, index=False)
        self.moves_frame().to_csv(moves_path, index=False)
        logger.info("Wrote chain diagnostics", trace=str(path), moves=str(moves_path),
                    nonfinite_rejections=self.nonfinite_rejections)
        return path, moves_path
