"""
Tests for posterior.prediction
"""

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dataset import DatasetError, ResponseTransform, augment
from model import Hyperparams
from posterior import (
    PredictionResult,
    ci_width_report,
    predict,
    predict_dataset,
    predict_draw_matrix,
    summarize_draws,
    write_predictions_csv,
)
from sampler import PosteriorDraws, run_chain
from trees import Ensemble, RoutingError, SplitRule, Tree
from tests.conftest import make_dataset


def handmade_draws(values, dummy_map=(), n_base=1) -> PosteriorDraws:
    """One tree per draw: split x1 at 0 (missing right), leaves (v, v + 1)."""
    ensembles = []
    for v in values:
        tree = Tree.stump(n_base + len(dummy_map)).grow(0, SplitRule(0, 0.0, False))
        left, right = tree.children(0)
        tree.value[left], tree.value[right] = v, v + 1.0
        ensembles.append(Ensemble(trees=[tree], sigma_sq=1.0))
    n = len(values)
    return PosteriorDraws(
        ensembles=ensembles,
        transform=ResponseTransform(y_min=0.0, y_max=1.0),
        column_names=tuple(f"x{j + 1}" for j in range(n_base)),
        dummy_map=dummy_map,
        n_burn=0,
        sigma_trace=np.ones(n),
        depth_trace=np.ones(n),
        leaves_trace=np.full(n, 2.0),
    )


class TestPredictDrawMatrix:

    def test_routes_and_unscales(self):
        draws = handmade_draws([0.0, 0.1, 0.2])
        X = np.array([[-1.0], [1.0], [0.0]])
        M = np.array([[False], [False], [True]])
        matrix = predict_draw_matrix(draws, X, M)
        # inverse maps s -> s + 0.5 for the unit range
        expected = np.array([[0.5, 1.5, 1.5], [0.6, 1.6, 1.6], [0.7, 1.7, 1.7]])
        assert_allclose(matrix, expected)

    def test_column_mismatch(self):
        draws = handmade_draws([0.0])
        with pytest.raises(RoutingError):
            predict_draw_matrix(draws, np.zeros((1, 2)), np.zeros((1, 2), bool))

    def test_explicit_transform_overrides(self):
        draws = handmade_draws([0.0])
        matrix = predict_draw_matrix(draws, np.array([[-1.0]]), np.array([[False]]),
                                     transform=ResponseTransform(0.0, 10.0))
        assert_allclose(matrix, [[5.0]])


class TestSummaries:

    def test_quantile_interval(self, rng):
        per_draw = rng.normal(size=(1000, 3))
        results = summarize_draws(per_draw, level=0.9)
        lower, upper = np.quantile(per_draw, [0.05, 0.95], axis=0)
        assert_allclose([r.ci_lower for r in results], lower)
        assert_allclose([r.ci_upper for r in results], upper)
        assert_allclose([r.point for r in results], per_draw.mean(axis=0))
        assert [r.row_id for r in results] == [0, 1, 2]

    def test_median_point(self):
        per_draw = np.array([[0.0], [1.0], [10.0]])
        (result,) = summarize_draws(per_draw, point="median")
        assert result.point == 1.0

    def test_median_reported_with_mean_point(self):
        per_draw = np.array([[0.0], [1.0], [10.0]])
        (result,) = summarize_draws(per_draw)
        assert result.point == pytest.approx(11.0 / 3.0)
        assert result.median == 1.0

    def test_median_inside_interval(self, rng):
        per_draw = rng.gamma(shape=0.5, scale=2.0, size=(400, 6))
        for level in (0.5, 0.8, 0.95):
            for r in summarize_draws(per_draw, level=level):
                assert r.ci_lower <= r.median <= r.ci_upper

    def test_invalid_level_and_point(self):
        with pytest.raises(ValueError):
            summarize_draws(np.zeros((3, 1)), level=1.0)
        with pytest.raises(ValueError):
            summarize_draws(np.zeros((3, 1)), point="mode")

    def test_interval_contains_point_for_symmetric_draws(self, rng):
        per_draw = rng.normal(size=(500, 4))
        for r in summarize_draws(per_draw):
            assert r.ci_lower <= r.point <= r.ci_upper
            assert r.covers(r.point)
            assert r.width > 0


class TestPredict:

    def test_predict_with_own_masks(self):
        draws = handmade_draws([0.0, 0.2])
        results = predict(draws, None, np.array([[-3.0], [9.0]]), np.array([[False], [True]]), level=0.5)
        assert results[0].point == pytest.approx(0.6)
        assert results[1].point == pytest.approx(1.6)

    def test_dummy_columns_built_from_rows(self):
        # tree splits on the dummy column of x1 (augmented column 1)
        tree = Tree.stump(2).grow(0, SplitRule(1, 0.0, True))
        left, right = tree.children(0)
        tree.value[left], tree.value[right] = -0.5, 0.5
        draws = PosteriorDraws(
            ensembles=[Ensemble(trees=[tree], sigma_sq=1.0)],
            transform=ResponseTransform(0.0, 1.0),
            column_names=("x1",),
            dummy_map=(0,),
            n_burn=0,
            sigma_trace=[1.0],
            depth_trace=[1.0],
            leaves_trace=[2.0],
        )
        results = predict(draws, None, np.array([[0.3], [0.0]]), np.array([[False], [True]]))
        assert results[0].point == pytest.approx(0.0)
        assert results[1].point == pytest.approx(1.0)

    def test_predict_dataset_checks_columns(self):
        draws = handmade_draws([0.0])
        other = make_dataset(np.zeros((2, 1)), [0.0, 1.0], names=("z",))
        with pytest.raises(DatasetError):
            predict_dataset(draws, other)

    def test_missing_rows_get_wider_intervals(self, rng):
        n = 200
        x1 = rng.normal(size=n)
        x2 = x1 + 0.3 * rng.normal(size=n)
        y = 2.0 * x1 + 0.2 * rng.normal(size=n)
        mask = np.zeros((n, 2), dtype=bool)
        mask[rng.choice(n, 40, replace=False), 0] = True
        d = make_dataset(np.column_stack([x1, x2]), y, mask)
        draws = run_chain(augment(d), Hyperparams(m=20, n_burn=150, n_post=150), seed=4)

        rows = np.array([[0.5, 0.5], [0.5, 0.5]])
        masks = np.array([[False, False], [True, False]])
        observed, masked = predict(draws, None, rows, masks)
        (comparison,) = ci_width_report([(observed, masked)])
        assert comparison.ratio == pytest.approx(masked.width / observed.width)
        assert comparison.ratio > 1.0


class TestWidthReport:

    def test_ratio(self):
        a = PredictionResult(0, 0.0, -1.0, 1.0, np.zeros(2), median=0.0)
        b = PredictionResult(1, 0.0, -2.0, 2.0, np.zeros(2), median=0.0)
        (comparison,) = ci_width_report([(a, b)])
        assert comparison.observed_width == 2.0
        assert comparison.masked_width == 4.0
        assert comparison.ratio == 2.0


class TestWritePredictions:

    def test_csv_layout(self, tmp_path):
        results = summarize_draws(np.array([[1.0, 2.0], [3.0, 4.0]]))
        path = write_predictions_csv(results, tmp_path / "pred.csv", per_draw_path=tmp_path / "draws.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["row_id", "point", "median", "ci_lower", "ci_upper"]
        assert_allclose(frame["point"], [2.0, 3.0])
        assert_allclose(frame["median"], [2.0, 3.0])
        per_draw = pd.read_csv(tmp_path / "draws.csv", index_col="draw")
        assert list(per_draw.columns) == ["row_0", "row_1"]
        assert_array_equal(per_draw.to_numpy(), [[1.0, 2.0], [3.0, 4.0]])


@pytest.mark.slow
class TestWidthOnSurface:

    def test_masked_points_get_wider_intervals(self):
        from harness import ILLUSTRATION_POINTS
        from harness.experiment import WIDTH_PAIRS
        from mdm import generate_surface, load_preset

        preset = load_preset("pattern_mixture_illustration")
        labels = list(ILLUSTRATION_POINTS)
        rows = np.array([[0.0 if v is None else v for v in ILLUSTRATION_POINTS[k]] for k in labels])
        masks = np.array([[v is None for v in ILLUSTRATION_POINTS[k]] for k in labels])

        ratios = []
        for seed in (1, 2, 3):
            masked = preset.apply(generate_surface(preset.surface, seed=seed), 0, seed + 100)
            draws = run_chain(augment(masked), Hyperparams(m=50, n_burn=300, n_post=300), seed=seed)
            by_label = dict(zip(labels, predict(draws, None, rows, masks)))
            report = ci_width_report([(by_label[a], by_label[b]) for a, b in WIDTH_PAIRS])
            ratios.append([c.ratio for c in report])
        assert np.all(np.mean(ratios, axis=0) > 1.0)
