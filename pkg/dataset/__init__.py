# Dataset Module
from .dataset import (
    Dataset,
    AugmentedDataset,
    ResponseTransform,
    DatasetError,
    IngestionError,
    ingest_csv,
    augment,
    augment_rows,
    scale_response,
    level_sidecar_path,
    write_level_dictionary,
    read_level_dictionary,
    write_dataset_csv,
)

__all__ = [
    "Dataset",
    "AugmentedDataset",
    "ResponseTransform",
    "DatasetError",
    "IngestionError",
    "ingest_csv",
    "augment",
    "augment_rows",
    "scale_response",
    "level_sidecar_path",
    "write_level_dictionary",
    "read_level_dictionary",
    "write_dataset_csv",
]
