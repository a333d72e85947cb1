"""Largest-component filtering and restoration to the original scan geometry."""

from .components import ComponentLabeling, label_components, largest_component
from .restore import merge_masks, restore_geometry

__all__ = [
    "ComponentLabeling",
    "label_components",
    "largest_component",
    "merge_masks",
    "restore_geometry",
]
