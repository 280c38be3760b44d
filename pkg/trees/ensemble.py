"""
Tree Ensemble
Sum-of-trees snapshot with its noise variance.
"""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .tree import Tree


@dataclass
class Ensemble:
    trees: List[Tree]
    sigma_sq: float

    def __post_init__(self):
        if not self.trees:
            raise ValueError("an ensemble needs at least one tree")
        if not self.sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq}")

    @property
    def m(self) -> int:
        return len(self.trees)

    def predict(self, X: np.ndarray, M: np.ndarray) -> np.ndarray:
        """Sum of routed leaf values, in scaled-response units."""
        total = np.zeros(np.atleast_2d(X).shape[0])
        for tree in self.trees:
            total += tree.predict(X, M)
        return total

    def mean_depth(self) -> float:
        return float(np.mean([tree.max_depth() for tree in self.trees]))

    def mean_leaves(self) -> float:
        return float(np.mean([tree.n_leaves for tree in self.trees]))

    def to_dict(self) -> Dict:
        return {"sigma_sq": float(self.sigma_sq), "trees": [tree.to_dict() for tree in self.trees]}

    @classmethod
    def from_dict(cls, payload: Dict) -> "Ensemble":
        return cls(trees=[Tree.from_dict(t) for t in payload["trees"]], sigma_sq=float(payload["sigma_sq"]))
