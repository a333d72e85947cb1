"""Environment configuration interface for femur-seg.

This module provides a clean interface for accessing environment variables,
centralizing all environment variable access in one place.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

from common.constants import DEFAULT_OUTPUT_DIR
from common.errors import ConfigurationError

# Load environment variables from .env file if it exists
load_dotenv()


class Environment:
    """Interface for accessing environment configuration."""

    @staticmethod
    def default_workers() -> int:
        """Get the default worker count for case-level parallelism.

        Returns:
            Worker count from FEMURSEG_WORKERS, defaults to 1 (never below 1)

        Raises:
            ConfigurationError: FEMURSEG_WORKERS is not an integer
        """
        raw = os.getenv("FEMURSEG_WORKERS", "1")
        try:
            workers = int(raw)
        except ValueError as e:
            raise ConfigurationError(f"FEMURSEG_WORKERS must be an integer, got {raw!r}") from e
        return max(1, workers)

    @staticmethod
    def output_dir() -> Path:
        """Get the default output directory for runs.

        Returns:
            Path from FEMURSEG_OUTPUT_DIR, defaults to DEFAULT_OUTPUT_DIR
        """
        value = os.getenv("FEMURSEG_OUTPUT_DIR")
        return Path(value) if value else DEFAULT_OUTPUT_DIR

    @staticmethod
    def log_level() -> str:
        """Get the log level.

        Returns:
            Upper-cased LOG_LEVEL, defaults to 'INFO'
        """
        return os.getenv("LOG_LEVEL", "INFO").upper()


# Singleton instance for convenient access
env = Environment()
