"""Volume, label mask and geometry record types.

Grids are indexed (z, y, x) with x varying fastest, matching the NIfTI payload
order. Spacing and origin follow the same axis order, in millimetres, and are
rounded to float32 on construction, the precision a NIfTI header stores.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

Dims = tuple[int, int, int]
Vec3 = tuple[float, float, float]


class IntensityUnit(str, Enum):
    """Intensity scale of a volume's voxels."""

    HU = "HU"
    NORMALIZED = "normalized"


def _as_float32(values: Vec3) -> Vec3:
    with np.errstate(over="ignore"):
        return tuple(float(np.float32(v)) for v in values)


def _check_spacing(spacing: Vec3) -> Vec3:
    if len(spacing) != 3:
        raise ValueError(f"spacing must have 3 components, got {spacing!r}")
    canonical = _as_float32(spacing)
    if not all(np.isfinite(s) and s > 0 for s in canonical):
        raise ValueError(f"spacing components must be strictly positive, got {spacing!r}")
    return canonical


def _check_origin(origin: Vec3) -> Vec3:
    if len(origin) != 3:
        raise ValueError(f"origin must be 3 finite values, got {origin!r}")
    canonical = _as_float32(origin)
    if not all(np.isfinite(o) for o in canonical):
        raise ValueError(f"origin must be 3 finite values, got {origin!r}")
    return canonical


def _frozen_grid(data: npt.ArrayLike, dtype=None) -> np.ndarray:
    array = np.array(data, dtype=dtype, copy=True)
    if array.ndim != 3 or min(array.shape) <= 0:
        raise ValueError(f"grid must be 3D with positive dims, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar grid with voxel spacing and world origin.

    The data array is copied and marked read-only on construction, so a Volume
    can be shared between threads.
    """

    data: np.ndarray
    spacing: Vec3 = (1.0, 1.0, 1.0)
    origin: Vec3 = (0.0, 0.0, 0.0)
    intensity_unit: IntensityUnit = IntensityUnit.HU

    def __post_init__(self):
        data = _frozen_grid(self.data)
        if data.dtype.kind not in "iuf":
            raise ValueError(f"volume data must be numeric, got dtype {data.dtype}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "origin", _check_origin(self.origin))
        object.__setattr__(self, "intensity_unit", IntensityUnit(self.intensity_unit))
        if self.intensity_unit == IntensityUnit.NORMALIZED:
            if not (np.all(data >= 0.0) and np.all(data <= 1.0)):
                raise ValueError("normalized volume values must lie in [0, 1]")

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)

    def with_data(
        self, data: npt.ArrayLike, intensity_unit: IntensityUnit | None = None
    ) -> "Volume":
        """Copy of this volume's geometry around new voxel data."""
        return Volume(
            data=data,
            spacing=self.spacing,
            origin=self.origin,
            intensity_unit=intensity_unit or self.intensity_unit,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.data.dtype == other.data.dtype
            and np.array_equal(self.data, other.data, equal_nan=self.data.dtype.kind == "f")
            and self.spacing == other.spacing
            and self.origin == other.origin
            and self.intensity_unit == other.intensity_unit
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LabelMask:
    """A binary 3D grid aligned to a Volume (1 = proximal femur)."""

    data: np.ndarray
    spacing: Vec3 = (1.0, 1.0, 1.0)
    origin: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.size and not np.isin(raw, (0, 1)).all():
            raise ValueError("label mask values must be 0 or 1")
        object.__setattr__(self, "data", _frozen_grid(raw, dtype=np.uint8))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "origin", _check_origin(self.origin))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def with_data(self, data: npt.ArrayLike) -> "LabelMask":
        return LabelMask(data=data, spacing=self.spacing, origin=self.origin)

    def aligned_with(self, other: "Volume | LabelMask") -> bool:
        """True when dims and spacing match another grid."""
        return self.dims == other.dims and self.spacing == other.spacing

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMask):
            return NotImplemented
        return (
            np.array_equal(self.data, other.data)
            and self.spacing == other.spacing
            and self.origin == other.origin
        )

    __hash__ = None


@dataclass(frozen=True)
class GeometryRecord:
    """Where a processed sub-volume sits inside its original scan.

    Attributes:
        original_dims: (D, H, W) of the scan before splitting
        crop_offset: voxel offset of the processed grid inside the original
        processed_dims: dims of the processed grid
        mirrored: whether the processed grid is x-reversed
        original_origin: world origin of the original scan (mm)
        side: "full", "right" or "left"
    """

    original_dims: Dims
    crop_offset: Dims = (0, 0, 0)
    processed_dims: Dims | None = None
    mirrored: bool = False
    original_origin: Vec3 = (0.0, 0.0, 0.0)
    side: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "original_dims", tuple(int(n) for n in self.original_dims))
        object.__setattr__(self, "crop_offset", tuple(int(n) for n in self.crop_offset))
        processed = self.processed_dims or self.original_dims
        object.__setattr__(self, "processed_dims", tuple(int(n) for n in processed))
        if any(o < 0 for o in self.crop_offset):
            raise ValueError(f"crop_offset must be non-negative, got {self.crop_offset}")
        for axis in range(3):
            if self.crop_offset[axis] + self.processed_dims[axis] > self.original_dims[axis]:
                raise ValueError(
                    f"crop_offset {self.crop_offset} + processed dims {self.processed_dims} "
                    f"exceed original dims {self.original_dims}"
                )

    def to_original(self, coord: Dims) -> Dims:
        """Map a processed-grid voxel coordinate to original-scan coordinates."""
        z, y, x = coord
        if self.mirrored:
            x = self.processed_dims[2] - 1 - x
        return (
            z + self.crop_offset[0],
            y + self.crop_offset[1],
            x + self.crop_offset[2],
        )
