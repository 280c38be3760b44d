"""
Boston Housing Data
Download helper and schema-checked loader. The CSV is never bundled.
"""

from pathlib import Path

import httpx
import structlog
from tenacity import retry, stop_after_attempt, wait_exponential

from dataset import Dataset, ingest_csv
from utils.config import ConfigurationError

logger = structlog.get_logger(__name__)

BHD_SOURCE_URL = "https://raw.githubusercontent.com/selva86/datasets/master/BostonHousing.csv"
BHD_RESPONSE = "medv"
BHD_COLUMNS = (
    "crim", "zn", "indus", "chas", "nox", "rm", "age",
    "dis", "rad", "tax", "ptratio", "b", "lstat", "medv",
)


@retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=1, min=2, max=10)
)
def _download(url: str, timeout: float) -> bytes:
    response = httpx.get(url, timeout=timeout, follow_redirects=True)
    response.raise_for_status()
    return response.content


def fetch_bhd_csv(dest, url: str = BHD_SOURCE_URL, timeout: float = 30.0) -> Path:
    """Download the Boston Housing CSV to ``dest`` and check its header."""
    dest = Path(dest)
    logger.info(f"Downloading Boston Housing data from {url}")
    content = _download(url, timeout)

    header = content.decode("utf-8").splitlines()[0]
    columns = [c.strip().strip('"').lower() for c in header.split(",")]
    missing = [c for c in BHD_COLUMNS if c not in columns]
    if missing:
        raise ConfigurationError(
            f"Downloaded file lacks columns {missing}; expected {', '.join(BHD_COLUMNS)}"
        )

    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_bytes(content)
    logger.info("Saved Boston Housing data", path=str(dest), bytes=len(content))
    return dest


def load_bhd(csv_path, response_column: str = BHD_RESPONSE, missing_token: str = "NA") -> Dataset:
    """Ingest a local BHD CSV, requiring every expected column."""
    if not csv_path:
        raise ConfigurationError("No Boston Housing CSV configured; run `python main.py fetch-bhd` or pass --csv")
    path = Path(csv_path)
    if not path.exists():
        raise ConfigurationError(f"Boston Housing CSV not found: {path}")

    d = ingest_csv(path, response_column=response_column, missing_token=missing_token)
    present = set(d.column_names) | {response_column}
    missing = [c for c in BHD_COLUMNS if c not in present]
    if missing:
        raise ConfigurationError(
            f"Boston Housing CSV lacks columns {missing}; expected {', '.join(BHD_COLUMNS)}"
        )
    logger.info("Loaded Boston Housing data", rows=d.n, covariates=d.p)
    return d
