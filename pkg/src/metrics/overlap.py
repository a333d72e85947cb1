"""Volume overlap between binary masks."""

import numpy as np

from common.errors import DegenerateInputError, ShapeError
from volume_io.types import LabelMask


def _as_bool(mask: LabelMask | np.ndarray) -> np.ndarray:
    data = mask.data if isinstance(mask, LabelMask) else np.asarray(mask)
    return data.astype(bool)


def dsc(prediction: LabelMask | np.ndarray, truth: LabelMask | np.ndarray) -> float:
    """Dice similarity coefficient 2|P ∩ G| / (|P| + |G|).

    Raises:
        ShapeError: dims differ
        DegenerateInputError: both masks are empty
    """
    p, g = _as_bool(prediction), _as_bool(truth)
    if p.shape != g.shape:
        raise ShapeError(f"prediction dims {p.shape} != ground truth dims {g.shape}")
    total = int(np.count_nonzero(p)) + int(np.count_nonzero(g))
    if total == 0:
        raise DegenerateInputError("DSC is undefined for two empty masks")
    return 2.0 * int(np.count_nonzero(p & g)) / total
