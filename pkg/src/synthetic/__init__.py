"""Synthetic CT-like phantoms for desk-scale training and tests."""

from .phantoms import Phantom, ellipsoid_mask, make_phantom, make_phantom_dataset

__all__ = ["Phantom", "ellipsoid_mask", "make_phantom", "make_phantom_dataset"]
