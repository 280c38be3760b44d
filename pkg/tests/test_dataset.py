"""
Tests for dataset.dataset
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dataset import (
    AugmentedDataset,
    Dataset,
    DatasetError,
    IngestionError,
    ResponseTransform,
    augment,
    augment_rows,
    ingest_csv,
    level_sidecar_path,
    read_level_dictionary,
    scale_response,
    write_dataset_csv,
    write_level_dictionary,
)
from tests.conftest import make_dataset


class TestDataset:

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DatasetError):
            Dataset(covariates=np.zeros((3, 2)), missing_mask=np.zeros((3, 1), bool),
                    response=np.zeros(3), column_names=("a", "b"))

    def test_rejects_missing_response(self):
        with pytest.raises(DatasetError):
            make_dataset(np.zeros((3, 1)), [1.0, np.nan, 2.0])

    def test_rejects_empty(self):
        with pytest.raises(DatasetError):
            Dataset(covariates=np.zeros((0, 2)), missing_mask=np.zeros((0, 2), bool),
                    response=np.zeros(0), column_names=("a", "b"))

    def test_arrays_are_read_only(self):
        d = make_dataset(np.ones((2, 1)), [1.0, 2.0])
        with pytest.raises(ValueError):
            d.covariates[0, 0] = 5.0

    def test_without_missingness_exposes_latent_values(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        mask = np.array([[True, False], [False, False]])
        d = make_dataset(X, [0.0, 1.0], mask)
        assert np.isnan(d.masked_covariates()[0, 0])
        cleared = d.without_missingness()
        assert not cleared.missing_mask.any()
        assert cleared.covariates[0, 0] == 1.0

    def test_complete_cases_and_fraction(self):
        mask = np.array([[True, False], [False, False], [False, True], [False, False]])
        d = make_dataset(np.zeros((4, 2)), np.arange(4.0), mask)
        assert d.row_missing_fraction() == 0.5
        assert_array_equal(d.complete_cases().response, [1.0, 3.0])

    def test_column_index_unknown(self):
        d = make_dataset(np.zeros((2, 1)), [0.0, 1.0])
        with pytest.raises(DatasetError):
            d.column_index("nope")


class TestAugment:

    def test_dummies_only_for_columns_with_missing(self):
        mask = np.array([[False, True, False], [False, False, False], [False, True, True]])
        d = make_dataset(np.zeros((3, 3)), [0.0, 1.0, 2.0], mask)
        aug = augment(d)
        assert aug.dummy_map == (1, 2)
        assert aug.p_m == 2
        assert aug.matrix.shape == (3, 5)
        assert_array_equal(aug.matrix[:, 3], [1, 0, 1])
        assert_array_equal(aug.matrix[:, 4], [0, 0, 1])
        assert not aug.mask[:, 3:].any()
        assert aug.column_names[3:] == ("M_x2", "M_x3")

    def test_no_missing_means_no_dummies(self):
        d = make_dataset(np.zeros((3, 2)), [0.0, 1.0, 2.0])
        aug = augment(d)
        assert aug.p_m == 0
        assert_array_equal(aug.matrix, d.covariates)

    def test_inconsistent_dummy_rejected(self):
        mask = np.array([[True], [False]])
        d = make_dataset(np.zeros((2, 1)), [0.0, 1.0], mask)
        with pytest.raises(DatasetError):
            AugmentedDataset(base=d, dummy_columns=np.array([[0], [1]]), dummy_map=(0,))

    def test_augment_rows_uses_own_mask(self):
        matrix, mask = augment_rows(np.array([[1.0, 2.0]]), np.array([[False, True]]), (1,))
        assert_array_equal(matrix, [[1.0, 2.0, 1.0]])
        assert_array_equal(mask, [[False, True, False]])

    def test_as_dataset(self):
        mask = np.array([[True], [False]])
        d = make_dataset(np.zeros((2, 1)), [0.0, 1.0], mask)
        plain = augment(d).as_dataset()
        assert plain.p == 2
        assert plain.column_names == ("x1", "M_x1")

    def test_augment_is_idempotent(self):
        mask = np.array([[True, False], [False, False], [True, False]])
        once = augment(make_dataset(np.arange(6.0).reshape(3, 2), [0.0, 1.0, 2.0], mask))
        twice = augment(once.as_dataset())
        assert twice.p_m == 0
        assert twice.column_names == once.column_names == ("x1", "x2", "M_x1")
        assert_array_equal(twice.matrix, once.matrix)


class TestResponseTransform:

    def test_maps_range_to_half_interval(self):
        scaled, t = scale_response([2.0, 4.0, 6.0])
        assert_allclose(scaled, [-0.5, 0.0, 0.5])
        assert_allclose(t.inverse(scaled), [2.0, 4.0, 6.0])
        assert_allclose(t.inverse_scale(1.0), 4.0)

    def test_preserves_linear_association(self):
        y = np.random.default_rng(3).normal(5.0, 2.0, size=200)
        scaled, _ = scale_response(y)
        assert np.corrcoef(y, scaled)[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert scaled.min() == pytest.approx(-0.5) and scaled.max() == pytest.approx(0.5)

    def test_degenerate(self):
        scaled, t = scale_response([3.0, 3.0])
        assert t.degenerate
        assert_array_equal(scaled, [0.0, 0.0])
        assert_allclose(t.inverse(0.0), 3.0)

    def test_dict_round_trip(self):
        t = ResponseTransform(1.0, 5.0)
        assert ResponseTransform.from_dict(json.loads(json.dumps(t.to_dict()))) == t


class TestIngestCsv:

    def test_missing_tokens_and_empty_cells(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,b,y\n1.5,NA,1\n,2,2\n3,4,3\n")
        d = ingest_csv(path, "y")
        assert d.column_names == ("a", "b")
        assert_array_equal(d.missing_mask, [[False, True], [True, False], [False, False]])
        assert_allclose(d.response, [1.0, 2.0, 3.0])

    def test_custom_token(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,y\n?,1\n2,2\n")
        d = ingest_csv(path, "y", missing_token="?")
        assert d.missing_mask[0, 0]

    def test_rows_with_missing_response_dropped(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,y\n1,NA\n2,2\n3,3\n")
        d = ingest_csv(path, "y")
        assert d.n == 2

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,y\n1,1\nabc,2\n")
        with pytest.raises(IngestionError, match="row 2, column 'a'"):
            ingest_csv(path, "y")

    def test_no_usable_rows(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,y\n1,NA\n")
        with pytest.raises(IngestionError):
            ingest_csv(path, "y")

    def test_missing_response_column(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(IngestionError):
            ingest_csv(path, "y")

    def test_without_response_column(self, tmp_path):
        path = tmp_path / "rows.csv"
        path.write_text("a,b\n1,NA\n2,3\n")
        d = ingest_csv(path, None)
        assert d.column_names == ("a", "b")
        assert_array_equal(d.response, [0.0, 0.0])

    def test_nominal_levels_and_sidecar(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("colour,y\nred,1\nblue,2\nNA,3\nred,4\n")
        d = ingest_csv(path, "y", nominal={"colour": []})
        assert d.levels == {"colour": ("blue", "red")}
        assert_array_equal(d.covariates[[0, 1, 3], 0], [1, 0, 1])

        sidecar = write_level_dictionary(d, level_sidecar_path(path))
        assert sidecar.name == "train.levels.json"
        assert read_level_dictionary(sidecar) == d.levels
        assert level_sidecar_path(tmp_path / "train.model.json.gz").name == "train.model.levels.json"
        assert level_sidecar_path(tmp_path / "fit.json").name == "fit.levels.json"

    def test_undeclared_level_rejected(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("colour,y\nred,1\ngreen,2\n")
        with pytest.raises(IngestionError, match="green"):
            ingest_csv(path, "y", nominal={"colour": ["red"]})

    def test_written_dataset_reads_back(self, tmp_path):
        mask = np.array([[False, True], [False, False]])
        d = make_dataset(np.array([[0.1, 7.0], [0.2, 8.0]]), [1.0, 2.0], mask)
        path = write_dataset_csv(d, tmp_path / "out.csv")
        back = ingest_csv(path, "y")
        assert_array_equal(back.missing_mask, mask)
        assert_allclose(back.covariates[~mask], d.covariates[~mask])
        assert_allclose(back.response, d.response)
