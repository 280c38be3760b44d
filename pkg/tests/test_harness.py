"""
Tests for harness.metrics, harness.experiment, harness.results, harness.acceptance and harness.bhd
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from harness import (
    BHD_COLUMNS,
    ExperimentConfig,
    IllustrationResult,
    ILLUSTRATION_POINTS,
    ScenarioResult,
    baseline_mean_impute,
    checks_for,
    derive_seed,
    fetch_bhd_csv,
    load_bhd,
    oos_rmse,
    run_bhd_study,
    run_pattern_mixture_study,
    run_selection_study,
)
from dataset import write_dataset_csv
from harness import bhd as bhd_module
from harness.acceptance import (
    check_bhd_mcar,
    check_bhd_pattern_mixture,
    check_illustration,
    check_nmar_crossover,
    check_selection_ordering,
    closest_level,
    first_level_at_least,
)
from harness.results import MDM_OFF_TEST, MISSING_TEST
from mdm import load_preset
from model import Hyperparams
from utils.config import ConfigurationError, get_default_config
from tests.conftest import make_dataset

TINY = Hyperparams(m=3, n_burn=5, n_post=5)


def synthetic_bhd(n: int = 60, seed: int = 0):
    rng = np.random.default_rng(seed)
    names = tuple(c for c in BHD_COLUMNS if c != "medv")
    X = rng.normal(size=(n, len(names)))
    y = 20.0 + 3.0 * X[:, names.index("rm")] - 2.0 * X[:, names.index("lstat")] + rng.normal(size=n)
    return make_dataset(X, y, names=names)


def scenario_records(scenario, cells, fractions, replicates=3):
    """Records with rmse = value + 0.001 * replicate for each (method, cell) -> {level: value}."""
    records = []
    for (method, cell), by_level in cells.items():
        for level, value in by_level.items():
            for r in range(replicates):
                records.append({
                    "scenario": scenario, "level": level, "level_value": float(level), "replicate": r,
                    "method": method, "cell": cell, "available": True,
                    "rmse": value + 0.001 * r, "ratio": value + 0.001 * r,
                    "row_missing_fraction": fractions[level],
                })
    return ScenarioResult(scenario=scenario, records=records)


class TestMetrics:

    def test_oos_rmse(self):
        truths = np.random.default_rng(0).normal(size=100)
        assert oos_rmse(truths, truths) == 0.0
        assert oos_rmse(truths + 1.0, truths) == pytest.approx(1.0, abs=1e-12)
        assert oos_rmse([1.0, 2.0, 3.0], [1.0, 2.0, 5.0]) == pytest.approx(np.sqrt(4.0 / 3.0))
        with pytest.raises(ValueError):
            oos_rmse([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            oos_rmse([], [])

    def test_derive_seed(self):
        assert derive_seed(5, 1) == derive_seed(5, 1)
        assert len({derive_seed(5, k) for k in range(5)}) == 5
        assert derive_seed(5, 1) != derive_seed(6, 1)
        assert derive_seed(5, 3, 1, 2) != derive_seed(5, 3, 2, 1)

    def test_mean_impute_uses_training_statistics(self):
        train = make_dataset(np.array([[1.0, 10.0], [3.0, 0.0], [0.0, 30.0]]), [0.0, 1.0, 2.0],
                             np.array([[False, False], [False, True], [True, False]]))
        test = make_dataset(np.array([[0.0, 5.0]]), [1.0], np.array([[True, False]]))
        filled_train, filled_test = baseline_mean_impute(train, test)
        assert_allclose(filled_train.covariates, [[1.0, 10.0], [3.0, 20.0], [2.0, 30.0]])
        assert_allclose(filled_test.covariates, [[2.0, 5.0]])
        assert not filled_train.missing_mask.any() and not filled_test.missing_mask.any()

    def test_mean_impute_without_missingness_is_identity(self):
        d = make_dataset(np.arange(6.0).reshape(3, 2), [0.0, 1.0, 2.0])
        filled_train, filled_test = baseline_mean_impute(d, d)
        assert_array_equal(filled_train.covariates, d.covariates)
        assert_array_equal(filled_test.covariates, d.covariates)

    def test_mean_impute_nominal_mode(self):
        levels = {"c": ("a", "b")}
        train = make_dataset(np.array([[1.0], [1.0], [0.0], [0.0]]), np.zeros(4),
                             np.array([[False], [False], [False], [True]]), names=("c",), levels=levels)
        test = make_dataset(np.array([[0.0]]), [0.0], np.array([[True]]), names=("c",), levels=levels)
        _, filled_test = baseline_mean_impute(train, test)
        assert filled_test.covariates[0, 0] == 1.0

    def test_mean_impute_fully_missing_column(self):
        train = make_dataset(np.zeros((3, 2)), np.arange(3.0), np.array([[True, False]] * 3))
        filled_train, _ = baseline_mean_impute(train, train)
        assert_array_equal(filled_train.covariates[:, 0], 0.0)


class TestExperimentConfig:

    def test_sweep_budget(self):
        config = ExperimentConfig.from_config(get_default_config(), "selection_mar")
        assert (config.hyper.n_burn, config.hyper.n_post) == (500, 500)
        assert config.replicates == 50
        assert config.response_column == "medv"

    def test_full_fidelity(self):
        settings = get_default_config()
        settings["harness"]["full_fidelity"] = True
        config = ExperimentConfig.from_config(settings, "selection_mar")
        assert (config.hyper.n_burn, config.hyper.n_post) == (1000, 1000)

    def test_overrides(self):
        config = ExperimentConfig.from_config(get_default_config(), "bhd_mcar", replicates=3, workers=None)
        assert config.replicates == 3
        assert config.workers == 1

    def test_bad_levels(self):
        config = ExperimentConfig(scenario="selection_mcar", levels=[0, 99])
        with pytest.raises(ConfigurationError):
            config.resolve_levels(load_preset("selection_mcar"))

    def test_default_baselines_follow_data_source(self):
        settings = get_default_config()
        bhd = ExperimentConfig.from_config(settings, "bhd_pattern_mixture")
        surface = ExperimentConfig.from_config(settings, "selection_mar")
        assert bhd.baselines is None
        assert bhd.resolve_baselines(load_preset("bhd_pattern_mixture")) == ["all_cases", "mean_impute"]
        assert surface.resolve_baselines(load_preset("selection_mar")) == ["all_cases", "complete_case"]

    def test_baselines_from_config(self):
        settings = get_default_config()
        settings["harness"]["baselines"] = ["mean_impute", "all_cases"]
        config = ExperimentConfig.from_config(settings, "bhd_mcar")
        assert config.resolve_baselines(load_preset("bhd_mcar")) == ["mean_impute", "all_cases"]

    def test_unknown_baseline_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(scenario="bhd_mcar", baselines=["median_impute"])

    def test_json_round_trip(self):
        config = ExperimentConfig(scenario="selection_mar", hyper=TINY, levels=[1, 2])
        assert ExperimentConfig.model_validate_json(config.model_dump_json()) == config


class TestSelectionStudy:

    @pytest.fixture
    def config(self):
        return ExperimentConfig(scenario="selection_mar", levels=[0, 5], replicates=2,
                                n_train=40, n_test=20, hyper=TINY, seed_base=3)

    def test_record_layout(self, config):
        result = run_selection_study(config)
        frame = result.to_frame()
        # 2 replicates x 2 levels x 2 methods x 2 cells
        assert len(frame) == 16
        assert set(frame["cell"]) == {MISSING_TEST, MDM_OFF_TEST}
        assert set(frame["method"]) == {"all_cases", "complete_case"}
        assert frame["available"].all()
        assert (frame["rmse"] > 0).all()

    def test_deterministic(self, config):
        a = run_selection_study(config).to_frame()
        b = run_selection_study(config).to_frame()
        pd.testing.assert_frame_equal(a, b)

    def test_missingness_grows_with_level(self, config):
        fractions = run_selection_study(config).level_missing_fractions()
        assert fractions[5] > fractions[0]

    def test_mean_impute_has_missing_cell_only(self, config):
        config = config.model_copy(update={"baselines": ["mean_impute"], "levels": [5], "replicates": 1})
        frame = run_selection_study(config).to_frame()
        assert list(frame["cell"]) == [MISSING_TEST]

    def test_rejects_bhd_scenario(self):
        with pytest.raises(ConfigurationError):
            run_selection_study(ExperimentConfig(scenario="bhd_mcar", hyper=TINY))

    @pytest.mark.slow
    def test_pool_size_does_not_change_results(self, config):
        config = config.model_copy(update={"replicates": 8})
        serial = run_selection_study(config).to_frame().to_csv(index=False)
        pooled = run_selection_study(config.model_copy(update={"workers": 8})).to_frame().to_csv(index=False)
        assert serial.encode() == pooled.encode()


class TestBhdStudy:

    def test_with_supplied_data(self):
        config = ExperimentConfig(scenario="bhd_mcar", levels=[0, 6], replicates=2, hyper=TINY,
                                  baselines=["all_cases", "complete_case", "mean_impute"])
        result = run_bhd_study(config, base=synthetic_bhd())
        frame = result.to_frame()
        assert len(frame) == 2 * 2 * 3
        assert set(frame["cell"]) == {MISSING_TEST}
        assert result.level_missing_fractions()[0] == 0.0

    def test_missing_columns(self):
        base = synthetic_bhd()
        keep = [j for j, name in enumerate(base.column_names) if name != "rm"]
        reduced = make_dataset(base.covariates[:, keep], base.response,
                               names=tuple(base.column_names[j] for j in keep))
        with pytest.raises(ConfigurationError, match="rm"):
            run_bhd_study(ExperimentConfig(scenario="bhd_mcar", hyper=TINY), base=reduced)

    def test_pattern_mixture_offsets_apply(self):
        config = ExperimentConfig(scenario="bhd_pattern_mixture", levels=[7], replicates=1, hyper=TINY)
        result = run_bhd_study(config, base=synthetic_bhd(n=80))
        assert result.level_missing_fractions()[7] > 0.0

    def test_default_run_includes_mean_impute(self):
        config = ExperimentConfig(scenario="bhd_pattern_mixture", levels=[7], replicates=1, hyper=TINY)
        result = run_bhd_study(config, base=synthetic_bhd(n=80))
        assert set(result.to_frame()["method"]) == {"all_cases", "mean_impute"}
        (outcome,) = check_bhd_pattern_mixture(result)
        assert "not run" not in outcome.detail


class TestIllustrationStudy:

    def test_points_and_truths(self):
        config = ExperimentConfig(scenario="pattern_mixture_illustration", replicates=2, hyper=TINY)
        result = run_pattern_mixture_study(config)
        frame = result.to_frame()
        assert len(frame) == 2 * len(ILLUSTRATION_POINTS)
        truths = frame.groupby("point")["truth"].first()
        assert truths["[0,0,0]"] == 0.0
        assert truths["[0,.,.]"] == pytest.approx(12.12, abs=0.005)
        assert (frame["ci_upper"] >= frame["ci_lower"]).all()

    def test_rejects_scenario_without_offsets(self):
        with pytest.raises(ConfigurationError):
            run_pattern_mixture_study(ExperimentConfig(scenario="selection_mar", hyper=TINY))


class TestResults:

    def test_aggregate_skips_unavailable(self):
        result = scenario_records("s", {("complete_case", MISSING_TEST): {0: 1.0}}, {0: 0.1}, replicates=2)
        result.records.append({**result.records[0], "replicate": 2, "available": False, "rmse": float("nan")})
        aggregate = result.aggregate()
        assert int(aggregate["n"].iloc[0]) == 2
        assert aggregate["mean_rmse"].iloc[0] == pytest.approx(1.0005)

    def test_cell_stats(self):
        result = scenario_records("s", {("all_cases", MISSING_TEST): {0: 1.0}}, {0: 0.1})
        mean, se = result.cell_stats(0, "all_cases", MISSING_TEST)
        assert mean == pytest.approx(1.001)
        assert se == pytest.approx(0.001 / np.sqrt(3))
        assert np.isnan(result.cell_stats(0, "complete_case", MISSING_TEST)[0])

    def test_write(self, tmp_path):
        result = scenario_records("s", {("all_cases", MISSING_TEST): {0: 1.0, 1: 2.0}}, {0: 0.1, 1: 0.4})
        raw, summary = result.write(tmp_path / "raw.csv", tmp_path / "out" / "summary.json")
        assert len(pd.read_csv(raw)) == 6
        payload = json.loads(summary.read_text())
        assert payload["scenario"] == "s"
        assert [level["level"] for level in payload["levels"]] == [0, 1]
        assert payload["levels"][1]["cells"][0]["mean_rmse"] == pytest.approx(2.001)

    def test_illustration_write(self, tmp_path):
        records = [{"scenario": "i", "replicate": r, "point": "[0,0,0]", "truth": 0.0, "estimate": 0.1,
                    "ci_lower": -1.0, "ci_upper": 1.0 + r, "width": 2.0 + r, "covered": True,
                    "row_missing_fraction": 0.3} for r in range(2)]
        result = IllustrationResult(scenario="i", records=records)
        assert result.mean_width("[0,0,0]") == 2.5
        _, summary = result.write(tmp_path / "raw.csv", tmp_path / "summary.json")
        payload = json.loads(summary.read_text())
        assert payload["points"][0]["covered"] == 2


class TestAcceptance:

    FRACTIONS = {0: 0.0, 1: 0.15, 2: 0.31, 3: 0.55}

    def test_level_selection(self):
        result = scenario_records("s", {("all_cases", MISSING_TEST): {k: 1.0 for k in self.FRACTIONS}},
                                  self.FRACTIONS)
        assert closest_level(result, 0.30) == 2
        assert first_level_at_least(result, 0.5) == 3
        assert first_level_at_least(result, 0.9) == 3

    def test_selection_ordering_passes(self):
        cells = {
            ("all_cases", MISSING_TEST): {2: 1.2},
            ("all_cases", MDM_OFF_TEST): {2: 1.0},
            ("complete_case", MISSING_TEST): {2: 1.6},
            ("complete_case", MDM_OFF_TEST): {2: 1.1},
        }
        result = scenario_records("selection_mar", cells, self.FRACTIONS)
        outcomes = check_selection_ordering(result)
        assert len(outcomes) == 3
        assert all(o.passed for o in outcomes)
        assert checks_for("selection_mar", result) == outcomes

    def test_selection_ordering_fails_on_reversal(self):
        cells = {
            ("all_cases", MISSING_TEST): {2: 1.7},
            ("all_cases", MDM_OFF_TEST): {2: 1.0},
            ("complete_case", MISSING_TEST): {2: 1.6},
            ("complete_case", MDM_OFF_TEST): {2: 1.1},
        }
        outcomes = check_selection_ordering(scenario_records("selection_mar", cells, self.FRACTIONS))
        assert not outcomes[0].passed
        assert outcomes[1].passed

    def test_nmar_crossover(self):
        cells = {("all_cases", MISSING_TEST): {3: 0.9}, ("all_cases", MDM_OFF_TEST): {3: 1.3}}
        (outcome,) = check_nmar_crossover(scenario_records("selection_nmar", cells, self.FRACTIONS))
        assert outcome.passed
        low = {3: 0.35}
        (outcome,) = check_nmar_crossover(scenario_records("selection_nmar", cells, low))
        assert not outcome.passed

    def test_bhd_pattern_mixture(self):
        cells = {("all_cases", MISSING_TEST): {3: 3.0}, ("mean_impute", MISSING_TEST): {3: 4.0}}
        (outcome,) = check_bhd_pattern_mixture(scenario_records("bhd_pattern_mixture", cells, self.FRACTIONS))
        assert outcome.passed

    def test_bhd_pattern_mixture_without_mean_impute(self):
        cells = {("all_cases", MISSING_TEST): {3: 3.0}}
        (outcome,) = check_bhd_pattern_mixture(scenario_records("bhd_pattern_mixture", cells, self.FRACTIONS))
        assert not outcome.passed
        assert "not run" in outcome.detail
        assert f"mean_impute/{MISSING_TEST}" in outcome.detail
        (outcome,) = check_bhd_mcar(scenario_records("bhd_mcar", cells, self.FRACTIONS))
        assert not outcome.passed and "not run" in outcome.detail

    def test_nmar_crossover_without_mdm_off_cell(self):
        cells = {("all_cases", MISSING_TEST): {3: 0.9}}
        (outcome,) = check_nmar_crossover(scenario_records("selection_nmar", cells, self.FRACTIONS))
        assert not outcome.passed
        assert f"all_cases/{MDM_OFF_TEST}" in outcome.detail

    def test_bhd_mcar_tolerance(self):
        close = {("all_cases", MISSING_TEST): {3: 3.0}, ("mean_impute", MISSING_TEST): {3: 3.2}}
        far = {("all_cases", MISSING_TEST): {3: 3.0}, ("mean_impute", MISSING_TEST): {3: 3.5}}
        assert check_bhd_mcar(scenario_records("bhd_mcar", close, self.FRACTIONS))[0].passed
        assert not check_bhd_mcar(scenario_records("bhd_mcar", far, self.FRACTIONS))[0].passed

    def test_illustration(self):
        records = []
        for point, width in (("[0,0,0]", 1.0), ("[0,.,0]", 2.0), ("[0,0,.]", 3.0), ("[0,.,.]", 4.0)):
            for r in range(5):
                records.append({"scenario": "i", "replicate": r, "point": point, "truth": 0.0, "estimate": 0.0,
                                "ci_lower": -width / 2, "ci_upper": width / 2, "width": width,
                                "covered": r < 4, "row_missing_fraction": 0.3})
        outcomes = check_illustration(IllustrationResult(scenario="i", records=records))
        assert len(outcomes) == 6
        assert all(o.passed for o in outcomes)

    def test_unknown_scenario_has_no_checks(self):
        assert checks_for("bhd_nmar", scenario_records("bhd_nmar", {}, {})) == []


class FakeResponse:

    def __init__(self, content: bytes, status: int = 200):
        self.content = content
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise RuntimeError(f"HTTP {self.status_code}")


class TestBhd:

    def test_fetch_writes_file(self, tmp_path, monkeypatch):
        body = (",".join(f'"{c}"' for c in BHD_COLUMNS) + "\n" + ",".join(["1"] * len(BHD_COLUMNS)) + "\n").encode()
        monkeypatch.setattr(bhd_module.httpx, "get", lambda url, **kwargs: FakeResponse(body))
        path = fetch_bhd_csv(tmp_path / "data" / "bhd.csv", url="https://example.invalid/bhd.csv")
        assert path.read_bytes() == body

    def test_fetch_rejects_wrong_header(self, tmp_path, monkeypatch):
        monkeypatch.setattr(bhd_module.httpx, "get", lambda url, **kwargs: FakeResponse(b"a,b\n1,2\n"))
        with pytest.raises(ConfigurationError, match="crim"):
            fetch_bhd_csv(tmp_path / "bhd.csv", url="https://example.invalid/bhd.csv")
        assert not (tmp_path / "bhd.csv").exists()

    def test_load_checks_columns(self, tmp_path):
        path = tmp_path / "bhd.csv"
        path.write_text("crim,medv\n1,2\n3,4\n")
        with pytest.raises(ConfigurationError, match="expected"):
            load_bhd(path)

    def test_load_needs_path(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_bhd("")
        with pytest.raises(ConfigurationError):
            load_bhd(tmp_path / "absent.csv")

    def test_load_valid_file(self, tmp_path):
        d = synthetic_bhd(n=10)
        path = write_dataset_csv(d, tmp_path / "bhd.csv", response_column="medv")
        loaded = load_bhd(path)
        assert loaded.p == 13
        assert_allclose(loaded.response, d.response)


@pytest.mark.slow
class TestAcceptanceScale:

    HYPER = Hyperparams(m=50, n_burn=300, n_post=300)

    @pytest.fixture
    def bhd_csv(self):
        path = Path(__file__).resolve().parent.parent / "data" / "BostonHousing.csv"
        if not path.exists():
            pytest.skip("Boston Housing CSV not downloaded (run fetch-bhd)")
        return str(path)

    def test_selection_mar_ordering(self):
        config = ExperimentConfig(scenario="selection_mar", levels=[3, 4, 5], replicates=10, hyper=self.HYPER)
        outcomes = check_selection_ordering(run_selection_study(config))
        assert len(outcomes) == 3
        for outcome in outcomes:
            assert outcome.passed, f"{outcome.name}: {outcome.detail}"

    def test_selection_nmar_crossover(self):
        config = ExperimentConfig(scenario="selection_nmar", levels=[7], replicates=10, hyper=self.HYPER)
        (outcome,) = check_nmar_crossover(run_selection_study(config))
        assert outcome.passed, outcome.detail

    def test_bhd_pattern_mixture(self, bhd_csv):
        config = ExperimentConfig(scenario="bhd_pattern_mixture", levels=[5, 6, 7], replicates=10,
                                  hyper=self.HYPER, bhd_csv=bhd_csv)
        (outcome,) = check_bhd_pattern_mixture(run_bhd_study(config))
        assert outcome.passed, outcome.detail

    def test_bhd_mcar(self, bhd_csv):
        config = ExperimentConfig(scenario="bhd_mcar", levels=[5, 6], replicates=10,
                                  hyper=self.HYPER, bhd_csv=bhd_csv)
        (outcome,) = check_bhd_mcar(run_bhd_study(config))
        assert outcome.passed, outcome.detail

    def test_illustration_coverage_and_widths(self):
        config = ExperimentConfig(scenario="pattern_mixture_illustration", replicates=10,
                                  hyper=Hyperparams().full_fidelity())
        result = run_pattern_mixture_study(config)
        covered = result.to_frame().groupby("point")["covered"].sum()
        assert set(covered.index) == set(ILLUSTRATION_POINTS)
        for point, count in covered.items():
            assert count >= 8, f"{point}: {count}/10 covered"

        outcomes = check_illustration(result)
        widths = [o for o in outcomes if o.name.startswith("interval at")]
        assert len(widths) == 2
        for outcome in widths:
            assert outcome.passed, f"{outcome.name}: {outcome.detail}"
