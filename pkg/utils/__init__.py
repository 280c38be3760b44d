# Utilities Module
from .config import load_config, get_default_config, ConfigurationError
from .logger import setup_logging

__all__ = ["load_config", "get_default_config", "ConfigurationError", "setup_logging"]
