"""Overlapping patch tiling of a volume."""

import itertools
from dataclasses import dataclass

import numpy as np

from common.errors import ConfigurationError, ShapeError

Dims = tuple[int, int, int]


@dataclass(frozen=True)
class PatchGrid:
    """Patch corners covering a (possibly zero-padded) volume.

    Attributes:
        dims: Dims of the unpadded volume
        patch_size: Patch extent per axis
        overlap: Overlap between neighbouring patches per axis
        origins: Patch corners in padded coordinates, in scan order
        padded_dims: Dims after symmetric zero padding (max of dims and patch size)
        pad_before: Zero voxels added in front of each axis
    """

    dims: Dims
    patch_size: Dims
    overlap: Dims
    origins: list[Dims]
    padded_dims: Dims
    pad_before: Dims

    @property
    def stride(self) -> Dims:
        return tuple(p - o for p, o in zip(self.patch_size, self.overlap, strict=True))

    @property
    def pad_after(self) -> Dims:
        return tuple(
            padded - dim - before
            for padded, dim, before in zip(self.padded_dims, self.dims, self.pad_before, strict=True)
        )

    def pad(self, data: np.ndarray) -> np.ndarray:
        """Zero-pad the trailing three axes of `data` to padded_dims."""
        widths = [(0, 0)] * (data.ndim - 3) + list(zip(self.pad_before, self.pad_after, strict=True))
        return np.pad(data, widths, mode="constant", constant_values=0)

    def crop(self, data: np.ndarray) -> np.ndarray:
        """Remove the padding from the trailing three axes of `data`."""
        slices = tuple(
            slice(before, before + dim) for before, dim in zip(self.pad_before, self.dims, strict=True)
        )
        return data[(Ellipsis, *slices)]

    def patch_slices(self, origin: Dims) -> tuple[slice, slice, slice]:
        return tuple(slice(o, o + p) for o, p in zip(origin, self.patch_size, strict=True))


def _axis_starts(padded: int, patch: int, stride: int) -> list[int]:
    starts = list(range(0, padded - patch + 1, stride))
    if starts[-1] + patch < padded:
        # Clamp the last tile back onto the boundary rather than padding further
        starts.append(padded - patch)
    return starts


def plan_patches(dims: Dims, patch: Dims, overlap: Dims) -> PatchGrid:
    """Lay out overlapping patches at multiples of (patch - overlap).

    Volumes smaller than the patch are zero-padded symmetrically; the final
    origin on each axis is shifted back so the last patch ends on the boundary.

    Raises:
        ConfigurationError: patch <= overlap or overlap < 0 on some axis
        ShapeError: non-positive dims
    """
    dims = tuple(int(d) for d in dims)
    patch = tuple(int(p) for p in patch)
    overlap = tuple(int(o) for o in overlap)
    if len(dims) != 3 or len(patch) != 3 or len(overlap) != 3:
        raise ShapeError("dims, patch and overlap must each have three components")
    if any(d <= 0 for d in dims):
        raise ShapeError(f"dims must be positive, got {dims}")
    for p, o in zip(patch, overlap, strict=True):
        if o < 0 or p <= o:
            raise ConfigurationError(f"need patch > overlap >= 0, got patch {patch}, overlap {overlap}")

    padded = tuple(max(d, p) for d, p in zip(dims, patch, strict=True))
    pad_before = tuple((pd - d) // 2 for pd, d in zip(padded, dims, strict=True))
    starts = [
        _axis_starts(pd, p, p - o) for pd, p, o in zip(padded, patch, overlap, strict=True)
    ]
    return PatchGrid(
        dims=dims,
        patch_size=patch,
        overlap=overlap,
        origins=[tuple(origin) for origin in itertools.product(*starts)],
        padded_dims=padded,
        pad_before=pad_before,
    )
