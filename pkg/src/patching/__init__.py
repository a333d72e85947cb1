"""Random patch cropping for training and overlapping tiling for inference."""

from .grid import PatchGrid, plan_patches
from .sampling import one_hot, pad_to_patch, random_crop, random_origin
from .stitching import ArityError, PatchAccumulator, stitch

__all__ = [
    "ArityError",
    "PatchAccumulator",
    "PatchGrid",
    "one_hot",
    "pad_to_patch",
    "plan_patches",
    "random_crop",
    "random_origin",
    "stitch",
]
