"""Turn raw CT scans into normalized, side-separated network inputs."""

from .case import PreprocessedCase
from .transforms import mirror_lr, normalize_minmax, prepare_case, split_halves

__all__ = ["PreprocessedCase", "mirror_lr", "normalize_minmax", "prepare_case", "split_halves"]
