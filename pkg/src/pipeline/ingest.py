"""Reading cases from disk and pairing prediction files with ground truth."""

from pathlib import Path

import numpy as np

from common.errors import DegenerateInputError
from common.logger import get_logger
from preprocess import PreprocessedCase, prepare_case
from volume_io import LabelMask, Volume, VolumeIOError, read_volume_file

from .config import NIFTI_SUFFIX, CaseEntry, case_id_from_path
from .errors import IngestionError, PairingError

logger = get_logger(__name__)


def read_grid(path: Path, case_id: str) -> Volume | LabelMask:
    try:
        return read_volume_file(path)
    except (VolumeIOError, OSError) as e:
        raise IngestionError(case_id, f"cannot read {path}: {e}") from e


def read_scan(path: Path, case_id: str) -> Volume:
    """A CT volume; a binary uint8 file is accepted as intensities too."""
    grid = read_grid(path, case_id)
    if isinstance(grid, LabelMask):
        return Volume(grid.data, spacing=grid.spacing, origin=grid.origin)
    return grid


def read_mask(path: Path, case_id: str) -> LabelMask:
    grid = read_grid(path, case_id)
    if isinstance(grid, LabelMask):
        return grid
    values = np.unique(grid.data)
    if not np.isin(values, (0, 1)).all():
        raise IngestionError(case_id, f"{path} is not a binary mask (values {values[:5]}...)")
    return LabelMask(grid.data.astype(np.uint8), spacing=grid.spacing, origin=grid.origin)


def load_cases(entries: list[CaseEntry], split: bool) -> list[PreprocessedCase]:
    """Read, normalize and (optionally) split every listed scan into femur cases."""
    cases = []
    for entry in entries:
        volume = read_scan(entry.image, entry.case_id)
        mask = read_mask(entry.mask, entry.case_id) if entry.mask else None
        if mask is not None and mask.dims != volume.dims:
            raise IngestionError(
                entry.case_id, f"mask dims {mask.dims} differ from image dims {volume.dims}"
            )
        try:
            cases.extend(prepare_case(volume, mask, case_id=entry.case_id, split=split))
        except DegenerateInputError as e:
            raise IngestionError(entry.case_id, str(e)) from e
    logger.debug(f"Loaded {len(entries)} scans as {len(cases)} cases")
    return cases


def collect_inputs(paths: list[Path]) -> list[Path]:
    """Expand directories into their .nii files, keeping listed files as given."""
    files = []
    for path in paths:
        if path.is_dir():
            files.extend(sorted(p for p in path.iterdir() if p.name.endswith(NIFTI_SUFFIX)))
        else:
            files.append(path)
    return files


def pair_masks(predictions_dir: Path, truth_dir: Path) -> list[tuple[str, Path, Path]]:
    """Match prediction and ground-truth files by file name.

    Raises:
        PairingError: a file on either side has no partner, or no files at all
    """
    predictions = {p.name: p for p in collect_inputs([predictions_dir])}
    truths = {p.name: p for p in collect_inputs([truth_dir])}
    unpaired = sorted(set(predictions) ^ set(truths))
    if unpaired:
        raise PairingError(f"unpaired cases: {unpaired}")
    if not predictions:
        raise PairingError(f"no masks found in {predictions_dir}")
    return [
        (case_id_from_path(Path(name)), predictions[name], truths[name])
        for name in sorted(predictions)
    ]
