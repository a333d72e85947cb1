"""Shared constants for the femur-seg toolkit.

For environment-based configuration (worker count, output directory), use the env module:
    from common.env import env
    workers = env.default_workers()
"""

from pathlib import Path

# Default locations
DEFAULT_OUTPUT_DIR = Path("./runs")
CHECKPOINT_SUFFIX = ".ckpt"

# Full-scale patch; inference overlap defaults to half the patch
FULL_PATCH_SIZE: tuple[int, int, int] = (128, 128, 128)

# Desk-scale profile used for synthetic phantoms
DESK_PATCH_SIZE: tuple[int, int, int] = (32, 32, 32)

# Foreground probability must exceed this to be labelled femur
FOREGROUND_THRESHOLD = 0.5

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_INGESTION_ERROR = 3
EXIT_PROCESSING_ERROR = 4
