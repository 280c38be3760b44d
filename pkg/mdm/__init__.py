# MDM Module
from .surface import (
    GeneratedModelSpec,
    SURFACE_COLUMNS,
    generate_surface,
    response_function,
    true_conditional_mean,
)
from .mechanisms import (
    ProbitTerm,
    MdmSpec,
    PatternMixtureSpec,
    inject_missingness,
    apply_pattern_mixture,
    row_missing_fraction,
)
from .presets import OffsetTemplate, ScenarioPreset, load_preset, list_presets

__all__ = [
    "GeneratedModelSpec",
    "SURFACE_COLUMNS",
    "generate_surface",
    "response_function",
    "true_conditional_mean",
    "ProbitTerm",
    "MdmSpec",
    "PatternMixtureSpec",
    "inject_missingness",
    "apply_pattern_mixture",
    "row_missing_fraction",
    "OffsetTemplate",
    "ScenarioPreset",
    "load_preset",
    "list_presets",
]
