"""
Scenario Presets
Named, versioned missingness scenarios stored as JSON next to this module.
"""

import json
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from dataset import Dataset
from utils.config import ConfigurationError

from .mechanisms import MdmSpec, PatternMixtureSpec, apply_pattern_mixture, inject_missingness
from .surface import GeneratedModelSpec

PRESET_DIR = Path(__file__).parent / "presets"


class OffsetTemplate(BaseModel):
    """Pattern-mixture offset given either explicitly or as a share of the response range."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    trigger: str
    sign: Literal[1, -1] = 1
    mu_b: Optional[float] = None
    sigma_b_sq: Optional[float] = Field(None, ge=0.0)
    range_fraction: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _check_source(self):
        explicit = self.mu_b is not None and self.sigma_b_sq is not None
        if explicit == (self.range_fraction is not None):
            raise ValueError("give either mu_b and sigma_b_sq, or range_fraction")
        return self

    def resolve(self, y) -> PatternMixtureSpec:
        if self.range_fraction is not None:
            return PatternMixtureSpec.from_response_range(y, self.trigger, self.range_fraction, self.sign)
        return PatternMixtureSpec(trigger=self.trigger, mu_b=self.mu_b,
                                  sigma_b_sq=self.sigma_b_sq, sign=self.sign)


class ScenarioPreset(BaseModel):
    """Mechanism templates swept over one parameter (``rate`` or ``gamma1``)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    description: str = ""
    data: Literal["surface", "bhd"]
    surface: Optional[GeneratedModelSpec] = None
    mechanisms: List[MdmSpec] = Field(min_length=1)
    level_parameter: Literal["rate", "gamma1"]
    levels: List[float] = Field(min_length=1)
    offsets: List[OffsetTemplate] = Field(default_factory=list)
    seed_policy: Literal["seed_base_plus_replicate"] = "seed_base_plus_replicate"

    @model_validator(mode="after")
    def _check_surface(self):
        if self.data == "surface" and self.surface is None:
            raise ValueError("surface scenarios need a surface specification")
        return self

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def mechanisms_at(self, level: int) -> List[MdmSpec]:
        if not 0 <= level < self.n_levels:
            raise ConfigurationError(f"scenario '{self.name}' has levels 0..{self.n_levels - 1}, got {level}")
        value = self.levels[level]
        return [m.with_level(self.level_parameter, value) for m in self.mechanisms]

    def offsets_for(self, response) -> List[PatternMixtureSpec]:
        return [template.resolve(response) for template in self.offsets]

    def apply(self, d: Dataset, level: int, seed, offset_seed=None) -> Dataset:
        """Inject the level's missingness, then any pattern-mixture offsets."""
        masked = inject_missingness(d, self.mechanisms_at(level), seed)
        if not self.offsets:
            return masked
        if offset_seed is None:
            offset_seed = np.random.SeedSequence(seed, spawn_key=(1,))
        return apply_pattern_mixture(masked, self.offsets_for(d.response), offset_seed)


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def load_preset(name: str) -> ScenarioPreset:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigurationError(f"Unknown scenario '{name}'; available: {', '.join(list_presets())}")
    with open(path, "r", encoding="utf-8") as f:
        return ScenarioPreset.model_validate(json.load(f))
