"""Spatial and intensity transforms applied jointly to an image and its mask.

Images are resampled with trilinear interpolation, masks with nearest
neighbour, both through the same inverse map. Samples that fall outside the
grid read 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from volume_io.types import IntensityUnit, LabelMask, Volume

GAUSSIAN_TRUNCATE = 3.0


@dataclass(frozen=True)
class DisplacementField:
    """Per-voxel (dz, dy, dx) displacement in voxel units, shape (3, D, H, W)."""

    components: np.ndarray

    def __post_init__(self):
        if self.components.ndim != 4 or self.components.shape[0] != 3:
            raise ValueError(f"displacement must have shape (3, D, H, W), got {self.components.shape}")
        if not np.all(np.isfinite(self.components)):
            raise ValueError("displacement field must be finite")

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.components.shape[1:])

    @property
    def max_magnitude(self) -> float:
        return float(np.sqrt((self.components**2).sum(axis=0)).max())


def _resampled(volume: Volume, image: np.ndarray) -> Volume:
    if volume.intensity_unit == IntensityUnit.NORMALIZED:
        image = np.clip(image, 0.0, 1.0)
    if volume.data.dtype.kind == "f":
        image = image.astype(volume.data.dtype, copy=False)
    return volume.with_data(image)


def apply_brightness(volume: Volume, factor: float) -> Volume:
    """Multiply every voxel by `factor`, clamped back onto [0, 1]."""
    return volume.with_data(np.clip(volume.data * factor, 0.0, 1.0))


def rotation_matrix(rot_deg: tuple[float, float, float]) -> np.ndarray:
    """Rotation Rz·Ry·Rx about the X, Y, Z axes, expressed on (z, y, x) indices."""
    rx, ry, rz = np.deg2rad(rot_deg)
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    rot_x = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rot_y = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rot_z = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    xyz_to_zyx = np.eye(3)[::-1]
    return xyz_to_zyx @ (rot_z @ rot_y @ rot_x) @ xyz_to_zyx


def apply_affine(
    volume: Volume,
    mask: LabelMask,
    rot_deg: tuple[float, float, float],
    scale: float,
) -> tuple[Volume, LabelMask]:
    """Rotate then scale about the grid centre.

    Each output voxel o samples the source at c + R^T (o - c) / scale.
    """
    if tuple(rot_deg) == (0.0, 0.0, 0.0) and scale == 1.0:
        return volume, mask

    matrix = rotation_matrix(rot_deg).T / scale
    center = (np.asarray(volume.dims, dtype=np.float64) - 1.0) / 2.0
    offset = center - matrix @ center

    image = ndimage.affine_transform(
        volume.data.astype(np.float64), matrix, offset=offset, order=1, mode="constant", cval=0.0
    )
    labels = ndimage.affine_transform(
        mask.data, matrix, offset=offset, order=0, mode="constant", cval=0
    )
    return _resampled(volume, image), mask.with_data(labels)


def make_displacement_field(
    dims: tuple[int, int, int], alpha: float, sigma: float, rng: np.random.Generator
) -> DisplacementField:
    """alpha · GaussianSmooth(U(-1, 1), sigma) independently per axis."""
    noise = rng.uniform(-1.0, 1.0, size=(3, *dims))
    smoothed = np.stack(
        [
            ndimage.gaussian_filter(
                noise[axis], sigma, mode="constant", cval=0.0, truncate=GAUSSIAN_TRUNCATE
            )
            for axis in range(3)
        ]
    )
    return DisplacementField(components=alpha * smoothed)


def warp(volume: Volume, mask: LabelMask, field: DisplacementField) -> tuple[Volume, LabelMask]:
    """Inverse-warp image and mask: output voxel p samples the source at p + field(p)."""
    if field.dims != volume.dims:
        raise ValueError(f"field dims {field.dims} do not match grid dims {volume.dims}")
    coords = np.indices(volume.dims, dtype=np.float64) + field.components
    image = ndimage.map_coordinates(
        volume.data.astype(np.float64), coords, order=1, mode="constant", cval=0.0
    )
    labels = ndimage.map_coordinates(mask.data, coords, order=0, mode="constant", cval=0)
    return _resampled(volume, image), mask.with_data(labels)


def elastic_deform(
    volume: Volume,
    mask: LabelMask,
    alpha: float,
    sigma: float,
    rng: np.random.Generator,
) -> tuple[Volume, LabelMask]:
    """Smooth random elastic warp; deterministic for a given generator state."""
    field = make_displacement_field(volume.dims, alpha, sigma, rng)
    if alpha == 0:
        return volume, mask
    return warp(volume, mask, field)
