"""
Splitting Rules
Missingness-aware split rules and the candidate rule space at a node.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np


@dataclass(frozen=True)
class SplitRule:
    """Threshold split on one augmented column plus a direction for missing values.

    Present values ``<= threshold`` go left, larger values go right, and rows
    missing the attribute go left iff ``send_missing_left``. Splitting on
    missingness itself is a threshold split on a dummy column.
    """
    attribute: int
    threshold: float
    send_missing_left: bool

    def goes_left(self, values: np.ndarray, missing: np.ndarray) -> np.ndarray:
        return np.where(missing, self.send_missing_left, values <= self.threshold)

    def to_dict(self) -> dict:
        return {
            "attribute": int(self.attribute),
            "threshold": float(self.threshold),
            "send_missing_left": bool(self.send_missing_left),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SplitRule":
        return cls(
            attribute=int(payload["attribute"]),
            threshold=float(payload["threshold"]),
            send_missing_left=bool(payload["send_missing_left"]),
        )


@dataclass(frozen=True)
class RuleSpace:
    """Rules available at a node: uniform attribute, uniform threshold, fair-coin direction."""
    attributes: Tuple[int, ...] = ()
    thresholds: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.attributes

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    def n_thresholds(self, attribute: int) -> int:
        values = self.thresholds.get(attribute)
        return 0 if values is None else len(values)

    def contains(self, rule: SplitRule) -> bool:
        values = self.thresholds.get(rule.attribute)
        return values is not None and bool(np.any(values == rule.threshold))

    def log_probability(self, rule: SplitRule) -> float:
        """Log probability of drawing ``rule``; -inf when it is not in the space."""
        if not self.contains(rule):
            return -math.inf
        return -(math.log(self.n_attributes)
                 + math.log(self.n_thresholds(rule.attribute))
                 + math.log(2.0))

    def sample(self, rng: np.random.Generator) -> SplitRule:
        if self.is_empty:
            raise ValueError("cannot sample from an empty rule space")
        attribute = self.attributes[int(rng.integers(self.n_attributes))]
        values = self.thresholds[attribute]
        threshold = float(values[int(rng.integers(len(values)))])
        send_missing_left = bool(rng.integers(2))
        return SplitRule(attribute=attribute, threshold=threshold, send_missing_left=send_missing_left)


EMPTY_RULE_SPACE = RuleSpace()


def collect_candidate_rules(X: np.ndarray, M: np.ndarray, rows: np.ndarray) -> RuleSpace:
    """Enumerate the split rules usable at a node holding ``rows``.

    A missing-free attribute needs two distinct observed values; its largest
    observed value is excluded so both children receive rows. An attribute
    with missing rows at the node keeps every observed value: with the
    largest one, sending missing values right separates present from missing.
    """
    rows = np.asarray(rows)
    if rows.size < 2:
        return EMPTY_RULE_SPACE

    sub_x = X[rows]
    sub_m = M[rows]
    attributes = []
    thresholds: Dict[int, np.ndarray] = {}
    for j in range(X.shape[1]):
        missing = sub_m[:, j]
        observed = np.unique(sub_x[~missing, j])
        if observed.size == 0:
            continue
        usable = observed if missing.any() else observed[:-1]
        if usable.size:
            attributes.append(j)
            thresholds[j] = usable
    return RuleSpace(attributes=tuple(attributes), thresholds=thresholds)


def has_candidate_rules(X: np.ndarray, M: np.ndarray, rows: np.ndarray) -> bool:
    """Cheap emptiness check for ``collect_candidate_rules``."""
    rows = np.asarray(rows)
    if rows.size < 2:
        return False
    sub_x = X[rows]
    sub_m = M[rows]
    for j in range(X.shape[1]):
        missing = sub_m[:, j]
        observed = sub_x[~missing, j]
        if observed.size == 0:
            continue
        if missing.any() or observed.min() < observed.max():
            return True
    return False


class RuleSpaceCache:
    """Memoized ``collect_candidate_rules`` over one design, keyed by a node's row indices.

    One cache serves a whole chain. It empties itself once ``max_entries``
    spaces are stored.
    """

    def __init__(self, X: np.ndarray, M: np.ndarray, max_entries: int = 512):
        if max_entries < 1:
            raise ValueError(f"max_entries must be >= 1, got {max_entries}")
        self.X = X
        self.M = M
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0
        self._spaces: Dict[bytes, RuleSpace] = {}

    @staticmethod
    def _key(rows: np.ndarray) -> bytes:
        return np.asarray(rows, dtype=np.int64).tobytes()

    def __len__(self) -> int:
        return len(self._spaces)

    def __call__(self, rows: np.ndarray) -> RuleSpace:
        key = self._key(rows)
        space = self._spaces.get(key)
        if space is not None:
            self.hits += 1
            return space
        self.misses += 1
        if len(self._spaces) >= self.max_entries:
            self._spaces.clear()
        space = collect_candidate_rules(self.X, self.M, rows)
        self._spaces[key] = space
        return space

    def has_rules(self, rows: np.ndarray) -> bool:
        """Emptiness check that reuses a stored space but never stores one."""
        space = self._spaces.get(self._key(rows))
        if space is not None:
            return not space.is_empty
        return has_candidate_rules(self.X, self.M, rows)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
