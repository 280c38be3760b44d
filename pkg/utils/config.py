"""
Configuration Loader
Handles loading and validating configuration.
"""

import os
from pathlib import Path
from typing import Any, Dict
import yaml
from dotenv import load_dotenv


class ConfigurationError(ValueError):
    """Raised when configuration or an input file does not match what a run needs."""


REQUIRED_SECTIONS = ["general", "data", "model", "sampler", "posterior", "harness"]


def load_config(config_path: str = "config.yaml") -> Dict[str, Any]:
    """Load configuration from YAML file."""
    path = Path(config_path)

    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    # Values like ${BHD_CSV_PATH} may come from a local .env
    load_dotenv()

    with open(path, 'r') as f:
        config = yaml.safe_load(f) or {}

    config = _expand_env_vars(config)
    _validate_config(config)

    return config


def _expand_env_vars(config: Any) -> Any:
    """Recursively expand environment variables in config values."""
    if isinstance(config, dict):
        return {k: _expand_env_vars(v) for k, v in config.items()}
    elif isinstance(config, list):
        return [_expand_env_vars(item) for item in config]
    elif isinstance(config, str):
        # Expand ${VAR} patterns; unset variables become empty
        if config.startswith("${") and config.endswith("}"):
            var_name = config[2:-1]
            return os.getenv(var_name, "")
        return config
    return config


def _validate_config(config: Dict[str, Any]) -> None:
    """Validate configuration has required sections."""
    for section in REQUIRED_SECTIONS:
        if section not in config:
            raise ConfigurationError(f"Missing required config section: {section}")


def get_default_config() -> Dict[str, Any]:
    """Get default configuration."""
    return {
        "general": {
            "log_level": "INFO",
            "log_dir": "./logs",
            "output_dir": "./outputs"
        },
        "data": {
            "missing_token": "NA",
            "response_column": "y"
        },
        "model": {
            "m": 50,
            "alpha": 0.95,
            "beta": 2.0,
            "k": 2.0,
            "nu": 3.0,
            "q": 0.9,
            "n_burn": 1000,
            "n_post": 1000
        },
        "sampler": {
            "n_chains": 1,
            "diagnostics": False,
            "debug_checks": False
        },
        "posterior": {
            "level": 0.95,
            "point_estimate": "mean"
        },
        "harness": {
            "replicates": 50,
            "train_fraction": 0.8,
            "n_train": 250,
            "n_test": 250,
            "workers": 1,
            "seed_base": 1,
            "baselines": [],
            "sweep_n_burn": 500,
            "sweep_n_post": 500,
            "full_fidelity": False
        },
        "bhd": {
            "csv_path": "",
            "response_column": "medv",
            "source_url": "https://raw.githubusercontent.com/selva86/datasets/master/BostonHousing.csv"
        }
    }
