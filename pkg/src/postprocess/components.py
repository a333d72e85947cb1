"""Connected-component labelling and largest-component extraction."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from common.errors import ConfigurationError, DegenerateInputError
from volume_io.types import LabelMask

# Neighbourhood size -> squared-distance rank for generate_binary_structure
_CONNECTIVITY_RANK = {6: 1, 18: 2, 26: 3}


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Labels 1..K in order of each component's first voxel in scan order.

    Attributes:
        labels: Integer grid, 0 = background
        component_sizes: Voxel count of label k at index k - 1
    """

    labels: np.ndarray
    component_sizes: list[int]

    @property
    def count(self) -> int:
        return len(self.component_sizes)


def label_components(mask: LabelMask | np.ndarray, connectivity: int = 26) -> ComponentLabeling:
    """Label foreground components under 6-, 18- or 26-connectivity."""
    if connectivity not in _CONNECTIVITY_RANK:
        raise ConfigurationError(f"connectivity must be 6, 18 or 26, got {connectivity}")
    data = mask.data if isinstance(mask, LabelMask) else np.asarray(mask)
    structure = ndimage.generate_binary_structure(3, _CONNECTIVITY_RANK[connectivity])
    raw, count = ndimage.label(data.astype(bool), structure=structure)
    if count == 0:
        return ComponentLabeling(np.zeros(data.shape, dtype=np.int32), [])

    # Renumber by first occurrence in C order
    flat = raw.ravel()
    present, first_index = np.unique(flat, return_index=True)
    order = np.argsort(first_index[present > 0])
    relabel = np.zeros(count + 1, dtype=np.int32)
    relabel[present[present > 0][order]] = np.arange(1, count + 1, dtype=np.int32)
    labels = relabel[raw]
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    return ComponentLabeling(labels, [int(s) for s in sizes])


def largest_component(mask: LabelMask, connectivity: int = 26) -> LabelMask:
    """Keep only the biggest component; equal sizes go to the one that starts first.

    Raises:
        DegenerateInputError: empty mask
    """
    labeling = label_components(mask, connectivity)
    if labeling.count == 0:
        raise DegenerateInputError("largest component of an empty mask")
    keep = int(np.argmax(labeling.component_sizes)) + 1
    return mask.with_data((labeling.labels == keep).astype(np.uint8))
