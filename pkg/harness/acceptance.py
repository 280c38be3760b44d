"""
Acceptance Checks
Directional orderings of replicate means used by the CLI's --check mode.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .experiment import WIDTH_PAIRS
from .results import MDM_OFF_TEST, MISSING_TEST, IllustrationResult, ScenarioResult


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str


def closest_level(result: ScenarioResult, target_fraction: float) -> int:
    """Level whose mean row-missingness is nearest ``target_fraction``."""
    fractions = result.level_missing_fractions()
    return min(fractions, key=lambda level: (abs(fractions[level] - target_fraction), level))


def first_level_at_least(result: ScenarioResult, min_fraction: float) -> int:
    """Lowest level reaching ``min_fraction`` row-missingness, else the highest level."""
    fractions = result.level_missing_fractions()
    reaching = [level for level in sorted(fractions) if fractions[level] >= min_fraction]
    return reaching[0] if reaching else max(fractions)


def _separated(better, worse) -> bool:
    """``better`` mean is below ``worse`` by at least the larger standard error."""
    (mean_b, se_b), (mean_w, se_w) = better, worse
    margin = np.nanmax([se_b, se_w, 0.0])
    return mean_w - mean_b >= margin


def _not_run(name: str, level: int, cells: Dict[Tuple[str, str], Tuple[float, float]]) -> Optional[CheckOutcome]:
    """Failed outcome naming the cells with no available replicate, if any."""
    absent = [f"{method}/{cell}" for (method, cell), (mean, _) in cells.items() if not np.isfinite(mean)]
    if not absent:
        return None
    return CheckOutcome(name, False, f"level {level}: baseline not run or unavailable: {', '.join(absent)}")


def _compare(name: str, level: int, result: ScenarioResult, better: Tuple[str, str],
             worse: Tuple[str, str], prefix: str = "") -> CheckOutcome:
    cells = {key: result.cell_stats(level, *key) for key in (better, worse)}
    absent = _not_run(name, level, cells)
    if absent is not None:
        return absent
    return CheckOutcome(
        name,
        _separated(cells[better], cells[worse]),
        f"{prefix or f'level {level}'}: {cells[better][0]:.4f} vs {cells[worse][0]:.4f}",
    )


def check_selection_ordering(result: ScenarioResult, target_fraction: float = 0.30) -> List[CheckOutcome]:
    level = closest_level(result, target_fraction)
    return [
        _compare("all-cases training beats complete-case training", level, result,
                 ("all_cases", MISSING_TEST), ("complete_case", MISSING_TEST)),
        _compare("all-cases: MDM-off test beats missing test", level, result,
                 ("all_cases", MDM_OFF_TEST), ("all_cases", MISSING_TEST)),
        _compare("complete-case: MDM-off test beats missing test", level, result,
                 ("complete_case", MDM_OFF_TEST), ("complete_case", MISSING_TEST)),
    ]


def check_nmar_crossover(result: ScenarioResult) -> List[CheckOutcome]:
    name = "all-cases: missing test beats MDM-off test at the highest level"
    level = max(result.level_missing_fractions())
    fraction = result.level_missing_fractions()[level]
    cells = {key: result.cell_stats(level, *key)
             for key in (("all_cases", MISSING_TEST), ("all_cases", MDM_OFF_TEST))}
    absent = _not_run(name, level, cells)
    if absent is not None:
        return [absent]
    missing, off = cells[("all_cases", MISSING_TEST)][0], cells[("all_cases", MDM_OFF_TEST)][0]
    return [CheckOutcome(
        name,
        fraction > 0.40 and missing < off,
        f"level {level} ({fraction:.0%} rows): {missing:.4f} vs {off:.4f}",
    )]


def check_bhd_pattern_mixture(result: ScenarioResult, min_fraction: float = 0.5) -> List[CheckOutcome]:
    level = first_level_at_least(result, min_fraction)
    fraction = result.level_missing_fractions()[level]
    outcome = _compare("missingness-aware fit beats mean imputation", level, result,
                       ("all_cases", MISSING_TEST), ("mean_impute", MISSING_TEST),
                       prefix=f"level {level} ({fraction:.0%} rows)")
    if outcome.passed and fraction < min_fraction:
        outcome = CheckOutcome(outcome.name, False, f"{outcome.detail}; below {min_fraction:.0%} rows")
    return [outcome]


def check_bhd_mcar(result: ScenarioResult, min_fraction: float = 0.5, tolerance: float = 0.10) -> List[CheckOutcome]:
    name = f"mean imputation within {tolerance:.0%} of the missingness-aware fit"
    level = first_level_at_least(result, min_fraction)
    cells = {key: result.cell_stats(level, *key)
             for key in (("all_cases", MISSING_TEST), ("mean_impute", MISSING_TEST))}
    absent = _not_run(name, level, cells)
    if absent is not None:
        return [absent]
    native, imputed = cells[("all_cases", MISSING_TEST)][0], cells[("mean_impute", MISSING_TEST)][0]
    return [CheckOutcome(
        name,
        bool(imputed <= (1.0 + tolerance) * native),
        f"level {level}: {imputed:.4f} vs {native:.4f}",
    )]


def check_illustration(result: IllustrationResult, min_coverage: float = 0.8) -> List[CheckOutcome]:
    aggregate = result.aggregate().set_index("point")
    outcomes = []
    for point, row in aggregate.iterrows():
        needed = int(np.ceil(min_coverage * row["replicates"]))
        outcomes.append(CheckOutcome(
            f"interval covers the true mean at {point}",
            int(row["covered"]) >= needed,
            f"{int(row['covered'])}/{int(row['replicates'])} covered, truth {row['truth']:.3f}",
        ))
    widths: Dict[str, float] = {point: result.mean_width(point) for point in aggregate.index}
    for narrow, wide in WIDTH_PAIRS:
        if narrow in widths and wide in widths:
            outcomes.append(CheckOutcome(
                f"interval at {wide} wider than at {narrow}",
                widths[narrow] < widths[wide],
                f"{widths[narrow]:.3f} vs {widths[wide]:.3f}",
            ))
    return outcomes


def checks_for(scenario: str, result) -> List[CheckOutcome]:
    """Acceptance checks that apply to a scenario; empty when none are defined."""
    if isinstance(result, IllustrationResult):
        return check_illustration(result)
    if scenario == "selection_mar":
        return check_selection_ordering(result)
    if scenario == "selection_nmar":
        return check_nmar_crossover(result)
    if scenario == "bhd_pattern_mixture":
        return check_bhd_pattern_mixture(result)
    if scenario == "bhd_mcar":
        return check_bhd_mcar(result)
    return []
