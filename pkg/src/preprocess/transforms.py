"""Intensity normalization, left/right splitting and mirroring.

All operations are pure index arithmetic on the grids; masks are never
interpolated here.
"""

from dataclasses import replace

import numpy as np

from common.errors import DegenerateInputError, GeometryError
from common.logger import get_logger
from volume_io.types import GeometryRecord, IntensityUnit, LabelMask, Volume

from .case import PreprocessedCase

logger = get_logger(__name__)


def normalize_minmax(volume: Volume) -> Volume:
    """Shift and scale intensities linearly onto [0, 1] using this volume's own range.

    The result is float32, the precision a NIfTI payload stores.

    Raises:
        DegenerateInputError: The volume is constant (zero range) or non-finite
    """
    data = volume.data.astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise DegenerateInputError("volume contains non-finite intensities")

    low = data.min()
    high = data.max()
    if high == low:
        raise DegenerateInputError(f"constant volume (every voxel = {low}); range is zero")

    normalized = np.clip((data - low) / (high - low), 0.0, 1.0).astype(np.float32)
    return volume.with_data(normalized, intensity_unit=IntensityUnit.NORMALIZED)


def _half(grid, x_start: int, x_stop: int):
    sz, sy, sx = grid.spacing
    oz, oy, ox = grid.origin
    origin = (oz, oy, ox + x_start * sx)
    data = grid.data[:, :, x_start:x_stop]
    if isinstance(grid, LabelMask):
        return LabelMask(data=data, spacing=grid.spacing, origin=origin)
    return Volume(data=data, spacing=grid.spacing, origin=origin, intensity_unit=grid.intensity_unit)


def split_halves(
    volume: Volume, mask: LabelMask | None = None, case_id: str = ""
) -> tuple[PreprocessedCase, PreprocessedCase]:
    """Cut a normalized scan at x = W/2 into (right, left) femur cases.

    The right case covers x in [0, W/2) and the left case x in [W/2, W); each
    geometry record carries its x-offset inside the original scan.

    Raises:
        GeometryError: W is odd or the mask is not aligned with the volume
    """
    depth, height, width = volume.dims
    if width % 2:
        raise GeometryError(f"cannot split odd width {width} into equal halves")
    if mask is not None and mask.dims != volume.dims:
        raise GeometryError(f"mask dims {mask.dims} do not match volume dims {volume.dims}")

    half = width // 2
    cases = []
    for side, start in (("right", 0), ("left", half)):
        geometry = GeometryRecord(
            original_dims=volume.dims,
            crop_offset=(0, 0, start),
            processed_dims=(depth, height, half),
            mirrored=False,
            original_origin=volume.origin,
            side=side,
        )
        cases.append(
            PreprocessedCase(
                input=_half(volume, start, start + half),
                mask=_half(mask, start, start + half) if mask is not None else None,
                geometry=geometry,
                case_id=f"{case_id}_{side}" if case_id else side,
            )
        )
    return cases[0], cases[1]


def mirror_lr(case: PreprocessedCase) -> PreprocessedCase:
    """Reverse the x-axis of input and mask and toggle the mirrored flag."""
    flipped_input = case.input.with_data(case.input.data[:, :, ::-1])
    flipped_mask = case.mask.with_data(case.mask.data[:, :, ::-1]) if case.mask is not None else None
    return replace(
        case,
        input=flipped_input,
        mask=flipped_mask,
        geometry=replace(case.geometry, mirrored=not case.geometry.mirrored),
    )


def prepare_case(
    volume: Volume,
    mask: LabelMask | None = None,
    case_id: str = "",
    split: bool = True,
) -> list[PreprocessedCase]:
    """Run the preprocessing chain on one scan.

    Normalizes, then (when `split`) cuts into halves and mirrors the left
    femur onto the right side so every case looks like a right hip.

    Returns:
        [right, mirrored left] when splitting, otherwise a single full case
    """
    normalized = normalize_minmax(volume)
    if not split:
        geometry = GeometryRecord(
            original_dims=volume.dims, original_origin=volume.origin, side="full"
        )
        return [PreprocessedCase(input=normalized, mask=mask, geometry=geometry, case_id=case_id)]

    right, left = split_halves(normalized, mask, case_id=case_id)
    logger.debug(f"Split {case_id or 'scan'} {volume.dims} into halves of {right.dims}")
    return [right, mirror_lr(left)]
