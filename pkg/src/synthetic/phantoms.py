"""Ellipsoid phantoms standing in for CT scans of a proximal femur.

The foreground is a randomly placed and sized ellipsoid; intensities are the
Gaussian-smoothed foreground on a soft-tissue background plus noise, stored
as int16 Hounsfield-like values.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from common.errors import ConfigurationError
from volume_io.types import LabelMask, Volume

Dims = tuple[int, int, int]

BACKGROUND_HU = -100.0
BONE_HU = 900.0
NOISE_HU = 60.0
SMOOTHING_SIGMA = 1.5


@dataclass(frozen=True)
class Phantom:
    case_id: str
    volume: Volume
    mask: LabelMask


def ellipsoid_mask(
    dims: Dims, center: tuple[float, float, float], radii: tuple[float, float, float]
) -> np.ndarray:
    """Boolean grid of voxels whose centres lie inside the axis-aligned ellipsoid."""
    z, y, x = np.ogrid[: dims[0], : dims[1], : dims[2]]
    return (
        ((z - center[0]) / radii[0]) ** 2
        + ((y - center[1]) / radii[1]) ** 2
        + ((x - center[2]) / radii[2]) ** 2
    ) <= 1.0


def _random_ellipsoid(
    dims: Dims, rng: np.random.Generator, x_range: tuple[int, int]
) -> np.ndarray:
    lo, hi = x_range
    extents = (dims[0], dims[1], hi - lo)
    radii = tuple(float(rng.uniform(0.15, 0.3) * n) for n in extents)
    center = [float(rng.uniform(r + 1, n - r - 1)) for r, n in zip(radii, extents, strict=True)]
    center[2] += lo
    return ellipsoid_mask(dims, tuple(center), radii)


def make_phantom(
    dims: Dims,
    rng: np.random.Generator,
    *,
    bilateral: bool = False,
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> tuple[Volume, LabelMask]:
    """One synthetic scan and its mask.

    Args:
        dims: (D, H, W); each axis at least 8 voxels
        rng: Source of all randomness
        bilateral: Place one ellipsoid in each x-half, like a scan of both hips
        spacing: Voxel size in mm
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3 or min(dims) < 8:
        raise ConfigurationError(f"phantom dims must be three values >= 8, got {dims}")
    if bilateral and dims[2] % 2:
        raise ConfigurationError(f"bilateral phantoms need an even width, got {dims[2]}")

    if bilateral:
        half = dims[2] // 2
        foreground = _random_ellipsoid(dims, rng, (0, half)) | _random_ellipsoid(
            dims, rng, (half, dims[2])
        )
    else:
        foreground = _random_ellipsoid(dims, rng, (0, dims[2]))

    smoothed = ndimage.gaussian_filter(foreground.astype(np.float64), sigma=SMOOTHING_SIGMA)
    intensities = BACKGROUND_HU + (BONE_HU - BACKGROUND_HU) * smoothed
    intensities += rng.normal(0.0, NOISE_HU, size=dims)
    hu = np.clip(np.rint(intensities), -1024, 3071).astype(np.int16)

    return (
        Volume(hu, spacing=spacing),
        LabelMask(foreground.astype(np.uint8), spacing=spacing),
    )


def make_phantom_dataset(
    count: int, dims: Dims, seed: int, *, bilateral: bool = False
) -> list[Phantom]:
    """`count` independent phantoms named phantom_000, phantom_001, ..."""
    if count < 1:
        raise ConfigurationError(f"phantom count must be positive, got {count}")
    streams = np.random.SeedSequence(seed).spawn(count)
    phantoms = []
    for index, stream in enumerate(streams):
        volume, mask = make_phantom(dims, np.random.default_rng(stream), bilateral=bilateral)
        phantoms.append(Phantom(f"phantom_{index:03d}", volume, mask))
    return phantoms
