"""Map predictions from processed sub-volumes back onto the original scan grid."""

import numpy as np

from common.errors import GeometryError
from volume_io.types import GeometryRecord, LabelMask


def restore_geometry(prediction: LabelMask, geometry: GeometryRecord) -> LabelMask:
    """Undo mirroring, then place the prediction at its crop offset in an empty
    grid of the original dims.

    Raises:
        GeometryError: prediction dims disagree with the record
    """
    if prediction.dims != geometry.processed_dims:
        raise GeometryError(
            f"prediction dims {prediction.dims} != recorded processed dims "
            f"{geometry.processed_dims}"
        )
    data = prediction.data[:, :, ::-1] if geometry.mirrored else prediction.data
    restored = np.zeros(geometry.original_dims, dtype=np.uint8)
    window = tuple(
        slice(offset, offset + n)
        for offset, n in zip(geometry.crop_offset, geometry.processed_dims, strict=True)
    )
    restored[window] = data
    return LabelMask(restored, spacing=prediction.spacing, origin=geometry.original_origin)


def merge_masks(masks: list[LabelMask]) -> LabelMask:
    """Voxelwise union of restored masks sharing one grid (e.g. both femurs of a scan)."""
    if not masks:
        raise GeometryError("nothing to merge")
    first = masks[0]
    union = np.zeros(first.dims, dtype=bool)
    for mask in masks:
        if not mask.aligned_with(first):
            raise GeometryError(f"cannot merge masks of dims {mask.dims} and {first.dims}")
        union |= mask.data.astype(bool)
    return first.with_data(union.astype(np.uint8))
