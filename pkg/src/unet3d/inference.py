"""Patch-based prediction of a whole case."""

from concurrent.futures import ThreadPoolExecutor
from typing import Protocol

import numpy as np

from common.constants import FOREGROUND_THRESHOLD, FULL_PATCH_SIZE
from common.logger import get_logger
from patching import PatchAccumulator, plan_patches
from preprocess.case import PreprocessedCase
from volume_io.types import LabelMask

logger = get_logger(__name__)

Dims = tuple[int, int, int]


class Segmenter(Protocol):
    """What inference needs from a network: read-only probabilities per patch."""

    patch_size: Dims | None

    def predict_proba(self, x: np.ndarray) -> np.ndarray: ...


def predict_probabilities(
    model: Segmenter,
    case: PreprocessedCase,
    *,
    patch_size: Dims | None = None,
    overlap: Dims | None = None,
    workers: int = 1,
) -> np.ndarray:
    """(2, D, H, W) class probabilities fused from overlapping patches.

    Patch size defaults to the size the model was trained on; overlap defaults
    to half the patch.
    """
    patch = tuple(patch_size or model.patch_size or FULL_PATCH_SIZE)
    overlap = tuple(overlap) if overlap is not None else tuple(p // 2 for p in patch)
    grid = plan_patches(case.dims, patch, overlap)
    padded = grid.pad(np.asarray(case.input.data, dtype=np.float64))
    accumulator = PatchAccumulator(grid)

    def run(origin):
        x = padded[grid.patch_slices(origin)][None, None]
        accumulator.add(origin, model.predict_proba(x)[0])

    logger.debug(f"{case.case_id or 'case'}: {len(grid.origins)} patches of {patch}")
    if workers > 1 and len(grid.origins) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, grid.origins))
    else:
        for origin in grid.origins:
            run(origin)
    return accumulator.result()


def predict_volume(
    model: Segmenter,
    case: PreprocessedCase,
    *,
    patch_size: Dims | None = None,
    overlap: Dims | None = None,
    workers: int = 1,
) -> LabelMask:
    """Label voxels whose fused foreground probability is strictly above 0.5."""
    probs = predict_probabilities(
        model, case, patch_size=patch_size, overlap=overlap, workers=workers
    )
    foreground = (probs[1] > FOREGROUND_THRESHOLD).astype(np.uint8)
    return LabelMask(foreground, spacing=case.input.spacing, origin=case.input.origin)
