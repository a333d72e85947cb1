"""Fuse per-patch probabilities back into a full-volume probability map."""

import threading

import numpy as np

from common.errors import ShapeError

from .grid import Dims, PatchGrid


class ArityError(ShapeError):
    """Number of patch predictions differs from the number of patch origins."""

    pass


class PatchAccumulator:
    """Sum-and-count buffer over the padded grid.

    `add` may be called from several inference workers; each call takes the
    lock for its accumulation. The mean is taken once in `result`.
    """

    def __init__(self, grid: PatchGrid, channels: int = 2):
        self.grid = grid
        self.channels = channels
        self._sum = np.zeros((channels, *grid.padded_dims), dtype=np.float64)
        self._count = np.zeros(grid.padded_dims, dtype=np.int32)
        self._lock = threading.Lock()

    def add(self, origin: Dims, probs: np.ndarray) -> None:
        expected = (self.channels, *self.grid.patch_size)
        if probs.shape != expected:
            raise ShapeError(f"patch probabilities must have shape {expected}, got {probs.shape}")
        window = self.grid.patch_slices(origin)
        with self._lock:
            self._sum[(slice(None), *window)] += probs
            self._count[window] += 1

    def result(self) -> np.ndarray:
        """Voxelwise mean over covering patches, cropped to the unpadded dims."""
        if not np.all(self._count > 0):
            raise ShapeError("some voxels are not covered by any patch")
        return self.grid.crop(self._sum / self._count)


def stitch(grid: PatchGrid, patch_probs: list[np.ndarray]) -> np.ndarray:
    """Average overlapping patch probabilities.

    Args:
        grid: Tiling the probabilities were predicted on
        patch_probs: One (2, *patch_size) array per origin, in origin order

    Returns:
        (2, D, H, W) probabilities; channels sum to 1 when every patch's do

    Raises:
        ArityError: len(patch_probs) != len(grid.origins)
    """
    if len(patch_probs) != len(grid.origins):
        raise ArityError(
            f"got {len(patch_probs)} patch predictions for {len(grid.origins)} origins"
        )
    channels = patch_probs[0].shape[0] if patch_probs else 2
    accumulator = PatchAccumulator(grid, channels=channels)
    for origin, probs in zip(grid.origins, patch_probs, strict=True):
        accumulator.add(origin, probs)
    return accumulator.result()
