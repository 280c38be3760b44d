"""
Dataset Module
Tabular covariates with an explicit missingness mask, dummy-column augmentation
and response scaling.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

logger = structlog.get_logger(__name__)

DEFAULT_MISSING_TOKEN = "NA"


class DatasetError(ValueError):
    """Raised when a dataset violates its structural invariants."""


class IngestionError(ValueError):
    """Raised when a CSV file cannot be turned into a dataset."""


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Covariate matrix with missingness mask and a fully observed response.

    Cells flagged in ``missing_mask`` hold a placeholder that consumers never
    read. Simulated datasets keep the latent (pre-masking) value there so
    oracle computations can still see it; ingested datasets hold NaN.
    """
    covariates: np.ndarray
    missing_mask: np.ndarray
    response: np.ndarray
    column_names: Tuple[str, ...]
    levels: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        covariates = np.array(self.covariates, dtype=float)
        mask = np.array(self.missing_mask, dtype=bool)
        response = np.array(self.response, dtype=float).reshape(-1)
        names = tuple(str(name) for name in self.column_names)

        if covariates.ndim != 2:
            raise DatasetError(f"covariates must be 2-dimensional, got shape {covariates.shape}")
        n, p = covariates.shape
        if n < 1 or p < 1:
            raise DatasetError(f"dataset needs n >= 1 and p >= 1, got n={n}, p={p}")
        if mask.shape != covariates.shape:
            raise DatasetError(f"mask shape {mask.shape} does not match covariates {covariates.shape}")
        if response.shape[0] != n:
            raise DatasetError(f"response has {response.shape[0]} entries for {n} rows")
        if not np.all(np.isfinite(response)):
            raise DatasetError("response contains missing or non-finite values")
        if len(names) != p:
            raise DatasetError(f"{len(names)} column names for {p} columns")
        unknown = set(self.levels) - set(names)
        if unknown:
            raise DatasetError(f"level dictionary references unknown columns: {sorted(unknown)}")

        object.__setattr__(self, "covariates", _frozen(covariates, float))
        object.__setattr__(self, "missing_mask", _frozen(mask, bool))
        object.__setattr__(self, "response", _frozen(response, float))
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "levels", {k: tuple(v) for k, v in self.levels.items()})

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DatasetError(f"unknown column '{name}'; available: {list(self.column_names)}") from None

    @property
    def nominal_columns(self) -> Tuple[int, ...]:
        return tuple(self.column_index(name) for name in self.column_names if name in self.levels)

    def masked_covariates(self) -> np.ndarray:
        """Covariates with NaN in every missing cell."""
        return np.where(self.missing_mask, np.nan, self.covariates)

    def _replace(self, **changes) -> "Dataset":
        values = dict(
            covariates=self.covariates,
            missing_mask=self.missing_mask,
            response=self.response,
            column_names=self.column_names,
            levels=self.levels,
        )
        values.update(changes)
        return Dataset(**values)

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows)
        return self._replace(
            covariates=self.covariates[rows],
            missing_mask=self.missing_mask[rows],
            response=self.response[rows],
        )

    def with_mask(self, mask: np.ndarray) -> "Dataset":
        return self._replace(missing_mask=mask)

    def with_response(self, response: np.ndarray) -> "Dataset":
        return self._replace(response=response)

    def without_missingness(self) -> "Dataset":
        """Same rows with the mask cleared, exposing the retained latent values."""
        return self._replace(missing_mask=np.zeros_like(self.missing_mask))

    def complete_case_rows(self) -> np.ndarray:
        return np.flatnonzero(~self.missing_mask.any(axis=1))

    def complete_cases(self) -> "Dataset":
        return self.subset(self.complete_case_rows())

    def row_missing_fraction(self) -> float:
        """Share of rows with at least one missing entry."""
        return float(self.missing_mask.any(axis=1).mean())


@dataclass(frozen=True, eq=False)
class AugmentedDataset:
    """Base dataset plus one missingness dummy per covariate that has missing entries."""
    base: Dataset
    dummy_columns: np.ndarray
    dummy_map: Tuple[int, ...]

    def __post_init__(self):
        dummies = np.array(self.dummy_columns, dtype=np.int8).reshape(self.base.n, -1)
        dummy_map = tuple(int(j) for j in self.dummy_map)
        if dummies.shape[1] != len(dummy_map):
            raise DatasetError(f"{dummies.shape[1]} dummy columns for {len(dummy_map)} map entries")
        if len(dummy_map) > self.base.p:
            raise DatasetError("more dummy columns than covariates")
        for k, source in enumerate(dummy_map):
            if not np.array_equal(dummies[:, k].astype(bool), self.base.missing_mask[:, source]):
                raise DatasetError(f"dummy column {k} disagrees with the mask of column {source}")
        object.__setattr__(self, "dummy_columns", _frozen(dummies, np.int8))
        object.__setattr__(self, "dummy_map", dummy_map)

        matrix = np.hstack([self.base.covariates, self.dummy_columns.astype(float)])
        mask = np.hstack([self.base.missing_mask, np.zeros(self.dummy_columns.shape, dtype=bool)])
        object.__setattr__(self, "_matrix", _frozen(matrix, float))
        object.__setattr__(self, "_mask", _frozen(mask, bool))

    @property
    def p_m(self) -> int:
        return len(self.dummy_map)

    @property
    def n_columns(self) -> int:
        return self.base.p + self.p_m

    @property
    def matrix(self) -> np.ndarray:
        """Augmented covariate matrix [X, M_1, ..., M_pM]."""
        return self._matrix

    @property
    def mask(self) -> np.ndarray:
        """Mask of the augmented matrix; dummy columns are never missing."""
        return self._mask

    @property
    def column_names(self) -> Tuple[str, ...]:
        dummy_names = tuple(f"M_{self.base.column_names[j]}" for j in self.dummy_map)
        return self.base.column_names + dummy_names

    def as_dataset(self) -> Dataset:
        return Dataset(
            covariates=self.matrix,
            missing_mask=self.mask,
            response=self.base.response,
            column_names=self.column_names,
            levels=self.base.levels,
        )


def augment(d: Dataset) -> AugmentedDataset:
    """Append a 0/1 dummy for every covariate with at least one missing entry.

    Columns that already have an ``M_<name>`` dummy are skipped, so augmenting
    ``augment(d).as_dataset()`` adds nothing.
    """
    present = set(d.column_names)
    dummy_map = tuple(
        int(j) for j in np.flatnonzero(d.missing_mask.any(axis=0))
        if f"M_{d.column_names[j]}" not in present
    )
    dummies = d.missing_mask[:, list(dummy_map)].astype(np.int8)
    if dummy_map:
        logger.debug(f"Augmented dataset with {len(dummy_map)} missingness dummies",
                     columns=[d.column_names[j] for j in dummy_map])
    return AugmentedDataset(base=d, dummy_columns=dummies, dummy_map=dummy_map)


def augment_rows(
    covariates: np.ndarray,
    missing_mask: np.ndarray,
    dummy_map: Sequence[int]
) -> Tuple[np.ndarray, np.ndarray]:
    """Build augmented rows for new data using the training dummy layout.

    Dummies come from the rows' own masks. A row missing in a column that had
    no training missingness gets no dummy and relies on direction bits alone.
    """
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    missing_mask = np.atleast_2d(np.asarray(missing_mask, dtype=bool))
    if covariates.shape != missing_mask.shape:
        raise DatasetError(f"mask shape {missing_mask.shape} does not match rows {covariates.shape}")
    dummy_map = list(dummy_map)
    dummies = missing_mask[:, dummy_map].astype(float)
    matrix = np.hstack([covariates, dummies])
    mask = np.hstack([missing_mask, np.zeros(dummies.shape, dtype=bool)])
    return matrix, mask


@dataclass(frozen=True)
class ResponseTransform:
    """Affine map of [y_min, y_max] onto [-0.5, 0.5]."""
    y_min: float
    y_max: float

    @property
    def degenerate(self) -> bool:
        return not self.y_max > self.y_min

    @property
    def span(self) -> float:
        return self.y_max - self.y_min

    def transform(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.degenerate:
            return np.zeros_like(y)
        return (y - self.y_min) / self.span - 0.5

    def inverse(self, scaled) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=float)
        if self.degenerate:
            return self.y_min + scaled
        return (scaled + 0.5) * self.span + self.y_min

    def inverse_scale(self, scaled_width) -> np.ndarray:
        """Convert a length (not a location) from scaled to original units."""
        scaled_width = np.asarray(scaled_width, dtype=float)
        return scaled_width if self.degenerate else scaled_width * self.span

    def to_dict(self) -> Dict[str, float]:
        return {"y_min": float(self.y_min), "y_max": float(self.y_max)}

    @classmethod
    def from_dict(cls, payload: Mapping[str, float]) -> "ResponseTransform":
        return cls(y_min=float(payload["y_min"]), y_max=float(payload["y_max"]))


def scale_response(y) -> Tuple[np.ndarray, ResponseTransform]:
    """Scale a response vector to [-0.5, 0.5]; constant input maps to zeros."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise DatasetError("cannot scale an empty response")
    t = ResponseTransform(y_min=float(y.min()), y_max=float(y.max()))
    if t.degenerate:
        logger.warning("Constant response; using a degenerate transform", value=t.y_min)
    return t.transform(y), t


def _parse_numeric(values: np.ndarray) -> np.ndarray:
    parsed = pd.to_numeric(pd.Series(values, dtype=object), errors="coerce")
    return parsed.to_numpy(dtype=float)


def ingest_csv(
    path,
    response_column: Optional[str],
    missing_token: str = DEFAULT_MISSING_TOKEN,
    nominal: Optional[Mapping[str, Sequence[str]]] = None
) -> Dataset:
    """Read a CSV file into a Dataset.

    Cells equal to ``missing_token`` or empty are missing. Columns listed in
    ``nominal`` are integer-encoded against their declared levels (an empty
    level list means the sorted observed levels). Rows with a missing
    response are dropped. With ``response_column=None`` every column is a
    covariate and the response is a zero placeholder, for prediction inputs.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    frame = frame.apply(lambda column: column.str.strip())
    if response_column is not None and response_column not in frame.columns:
        raise IngestionError(f"response column '{response_column}' not in {path.name}; "
                             f"columns: {list(frame.columns)}")

    covariate_names = [name for name in frame.columns if name != response_column]
    if not covariate_names:
        raise IngestionError(f"{path.name} has no covariate columns")

    nominal = dict(nominal or {})
    unknown = set(nominal) - set(covariate_names)
    if unknown:
        raise IngestionError(f"nominal columns not present in {path.name}: {sorted(unknown)}")

    tokens = {missing_token, ""}
    missing = frame.isin(tokens)
    n_rows = len(frame)

    covariates = np.full((n_rows, len(covariate_names)), np.nan)
    levels: Dict[str, Tuple[str, ...]] = {}
    for j, name in enumerate(covariate_names):
        cells = frame[name].to_numpy(dtype=object)
        present = ~missing[name].to_numpy()

        if name in nominal:
            declared = list(nominal[name]) or sorted(set(cells[present]))
            lookup = {level: code for code, level in enumerate(declared)}
            for i in np.flatnonzero(present):
                code = lookup.get(cells[i])
                if code is None:
                    raise IngestionError(f"row {i + 1}, column '{name}': '{cells[i]}' is not a declared level")
                covariates[i, j] = code
            levels[name] = tuple(declared)
            continue

        parsed = _parse_numeric(cells)
        bad = present & ~np.isfinite(parsed)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise IngestionError(f"row {i + 1}, column '{name}': cannot parse '{cells[i]}' as a number")
        covariates[present, j] = parsed[present]

    if response_column is None:
        response = np.zeros(n_rows)
        response_present = np.ones(n_rows, dtype=bool)
    else:
        response_cells = frame[response_column].to_numpy(dtype=object)
        response_present = ~missing[response_column].to_numpy()
        response = _parse_numeric(response_cells)
        bad = response_present & ~np.isfinite(response)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise IngestionError(f"row {i + 1}, column '{response_column}': "
                                 f"cannot parse '{response_cells[i]}' as a number")

    dropped = int((~response_present).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} rows with missing response", path=str(path))
    keep = np.flatnonzero(response_present)
    if keep.size == 0:
        raise IngestionError(f"{path.name} has no usable rows")

    mask = missing[covariate_names].to_numpy()[keep]
    dataset = Dataset(
        covariates=covariates[keep],
        missing_mask=mask,
        response=response[keep],
        column_names=tuple(covariate_names),
        levels=levels,
    )
    logger.info(f"Ingested {dataset.n} rows x {dataset.p} covariates",
                path=str(path), missing_cells=int(mask.sum()), nominal=sorted(levels))
    return dataset


def level_sidecar_path(path) -> Path:
    """``<name>.levels.json`` beside a model or CSV file, with .gz, .json and .csv suffixes dropped."""
    path = Path(path)
    name = path.name
    for suffix in (".gz", ".json", ".csv"):
        name = name.removesuffix(suffix)
    return path.with_name(f"{name}.levels.json")


def write_level_dictionary(d: Dataset, path) -> Path:
    """Persist the nominal level dictionary as a JSON sidecar."""
    path = Path(path)
    path.write_text(json.dumps({name: list(values) for name, values in d.levels.items()}, indent=2))
    return path


def read_level_dictionary(path) -> Dict[str, Tuple[str, ...]]:
    payload = json.loads(Path(path).read_text())
    return {name: tuple(values) for name, values in payload.items()}


def write_dataset_csv(d: Dataset, path, response_column: str = "y", missing_token: str = DEFAULT_MISSING_TOKEN) -> Path:
    """Write a dataset in the layout ``ingest_csv`` reads back.

    Missing cells become ``missing_token``; nominal columns are written as level labels.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(index=range(d.n))
    for j, name in enumerate(d.column_names):
        if name in d.levels:
            labels = np.array(d.levels[name], dtype=object)
            values = pd.Series(labels[np.nan_to_num(d.covariates[:, j]).astype(int)], dtype=object)
        else:
            values = pd.Series([repr(float(v)) for v in d.covariates[:, j]], dtype=object)
        values[d.missing_mask[:, j]] = missing_token
        frame[name] = values
    frame[response_column] = [repr(float(v)) for v in d.response]
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {d.n} rows", path=str(path), missing_cells=int(d.missing_mask.sum()))
    return path
