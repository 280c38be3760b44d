"""
Missing Data Mechanisms
MCAR, probit MAR/NMAR and threshold mechanisms acting on covariate masks, plus
pattern-mixture response offsets keyed on missingness.
"""

import math
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

from dataset import Dataset

logger = structlog.get_logger(__name__)

_COMPARISONS = {
    ">=": np.greater_equal,
    ">": np.greater,
    "<=": np.less_equal,
    "<": np.less,
}


class ProbitTerm(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    column: str
    power: int = Field(1, ge=1)


class MdmSpec(BaseModel):
    """One missingness mechanism applied independently to each target column.

    ``mcar`` and ``threshold`` use ``rate``; ``mar`` and ``nmar`` use
    Phi(gamma0 + gamma1 * sum of terms). Inputs are always the latent
    (pre-masking) covariate values.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    mechanism: Literal["mcar", "mar", "nmar", "threshold"]
    targets: List[str] = Field(min_length=1)
    rate: float = Field(0.0, ge=0.0, le=1.0)
    gamma0: float = -3.0
    gamma1: float = 0.0
    terms: List[ProbitTerm] = Field(default_factory=list)
    standardize: bool = False
    trigger: Optional[str] = None
    trigger_op: Literal[">=", ">", "<=", "<"] = ">="
    trigger_value: float = 0.0

    @model_validator(mode="after")
    def _check_mechanism(self):
        if self.mechanism == "mar":
            referenced = {t.column for t in self.terms}
            overlap = referenced.intersection(self.targets)
            if overlap:
                raise ValueError(f"MAR terms may not reference their targets: {sorted(overlap)}")
        if self.mechanism == "threshold" and not self.trigger:
            raise ValueError("a threshold mechanism needs a trigger column")
        return self

    def referenced_columns(self) -> List[str]:
        if self.mechanism in ("mar", "nmar"):
            return [t.column for t in self.terms]
        if self.mechanism == "threshold":
            return [self.trigger]
        return []

    def linear_predictor(self, d: Dataset) -> np.ndarray:
        total = np.zeros(d.n)
        for term in self.terms:
            values = d.covariates[:, d.column_index(term.column)]
            if self.standardize:
                sd = values.std()
                values = (values - values.mean()) / sd if sd > 0 else values - values.mean()
            total += values ** term.power
        return self.gamma0 + self.gamma1 * total

    def probabilities(self, d: Dataset) -> np.ndarray:
        """Per-row probability that each target goes missing."""
        if self.mechanism == "mcar":
            return np.full(d.n, self.rate)
        if self.mechanism == "threshold":
            trigger = d.covariates[:, d.column_index(self.trigger)]
            fires = _COMPARISONS[self.trigger_op](trigger, self.trigger_value)
            return np.where(fires, self.rate, 0.0)
        return norm.cdf(self.linear_predictor(d))

    def with_level(self, parameter: str, value: float) -> "MdmSpec":
        return self.model_copy(update={parameter: value})


class PatternMixtureSpec(BaseModel):
    """Response offset sign * B, B ~ N(mu_b, sigma_b_sq), for rows missing ``trigger``."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    trigger: str
    mu_b: float
    sigma_b_sq: float = Field(ge=0.0)
    sign: Literal[1, -1] = 1

    @classmethod
    def from_response_range(cls, y, trigger: str, fraction: float = 0.25, sign: int = 1) -> "PatternMixtureSpec":
        """mu_b as a fraction of range(y), sigma_b = mu_b / 4."""
        y = np.asarray(y, dtype=float)
        mu_b = fraction * float(y.max() - y.min())
        return cls(trigger=trigger, mu_b=mu_b, sigma_b_sq=(mu_b / 4.0) ** 2, sign=sign)


def inject_missingness(d: Dataset, specs: Sequence[MdmSpec], seed) -> Dataset:
    """Add mechanism-driven missingness on top of the dataset's existing mask."""
    rng = np.random.default_rng(seed)
    mask = d.missing_mask.copy()
    for spec in specs:
        for name in spec.referenced_columns():
            j = d.column_index(name)
            if d.missing_mask[:, j].any() and np.isnan(d.covariates[d.missing_mask[:, j], j]).any():
                raise ValueError(f"mechanism input '{name}' has no latent values for its missing cells")
        probabilities = spec.probabilities(d)
        for target in spec.targets:
            j = d.column_index(target)
            mask[:, j] |= rng.random(d.n) < probabilities

    result = d.with_mask(mask)
    logger.debug("Injected missingness", mechanisms=[s.mechanism for s in specs],
                 row_missing_fraction=round(result.row_missing_fraction(), 4))
    return result


def apply_pattern_mixture(
    d: Dataset,
    specs: Union[PatternMixtureSpec, Sequence[PatternMixtureSpec]],
    seed
) -> Dataset:
    """Offset the response of rows whose trigger column is missing."""
    if isinstance(specs, PatternMixtureSpec):
        specs = [specs]
    rng = np.random.default_rng(seed)
    response = d.response.copy()
    for spec in specs:
        offsets = rng.normal(spec.mu_b, math.sqrt(spec.sigma_b_sq), size=d.n)
        fires = d.missing_mask[:, d.column_index(spec.trigger)]
        response[fires] += spec.sign * offsets[fires]
    return d.with_response(response)


def row_missing_fraction(d: Dataset) -> float:
    """Share of rows with at least one missing covariate."""
    return d.row_missing_fraction()
