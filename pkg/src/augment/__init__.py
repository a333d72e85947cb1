"""Stochastic augmentation of (volume, mask) pairs."""

from .config import AugmentConfig
from .pipeline import AugmentationPlan, apply_plan, augment_pair, case_rng, draw_plan
from .transforms import (
    DisplacementField,
    apply_affine,
    apply_brightness,
    elastic_deform,
    make_displacement_field,
    rotation_matrix,
    warp,
)

__all__ = [
    "AugmentConfig",
    "AugmentationPlan",
    "DisplacementField",
    "apply_affine",
    "apply_brightness",
    "apply_plan",
    "augment_pair",
    "case_rng",
    "draw_plan",
    "elastic_deform",
    "make_displacement_field",
    "rotation_matrix",
    "warp",
]
