"""Random patch cropping for training batches."""

import numpy as np

from preprocess.case import PreprocessedCase

from .grid import Dims


def pad_to_patch(data: np.ndarray, patch: Dims) -> np.ndarray:
    """Symmetrically zero-pad any axis shorter than the patch."""
    widths = []
    for dim, size in zip(data.shape, patch, strict=True):
        missing = max(size - dim, 0)
        widths.append((missing // 2, missing - missing // 2))
    return np.pad(data, widths, mode="constant", constant_values=0)


def random_origin(dims: Dims, patch: Dims, rng: np.random.Generator) -> Dims:
    """Uniform patch corner among all valid positions (dims already >= patch)."""
    return tuple(int(rng.integers(0, d - p + 1)) for d, p in zip(dims, patch, strict=True))


def one_hot(mask: np.ndarray) -> np.ndarray:
    """(D, H, W) binary mask -> (2, D, H, W) background/foreground channels."""
    foreground = mask.astype(np.float64)
    return np.stack([1.0 - foreground, foreground])


def random_crop(
    case: PreprocessedCase, patch: Dims, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Crop one random patch from a case.

    Returns:
        (input, target) tensors shaped (1, 1, *patch) and (1, 2, *patch); the
        target is one-hot so its channels sum to 1 at every voxel
    """
    if case.mask is None:
        raise ValueError(f"case {case.case_id!r} has no mask to build a target from")

    image = pad_to_patch(case.input.data.astype(np.float64), patch)
    mask = pad_to_patch(case.mask.data, patch)
    origin = random_origin(image.shape, patch, rng)
    window = tuple(slice(o, o + p) for o, p in zip(origin, patch, strict=True))

    return image[window][None, None], one_hot(mask[window])[None]
