"""Read and write volumes and label masks (NIfTI-1 subset)."""

from .errors import (
    CapacityError,
    NiftiFormatError,
    OrientationError,
    PayloadSizeError,
    UnsupportedDatatypeError,
    VolumeIOError,
)
from .nifti import read_volume, read_volume_file, write_volume, write_volume_file
from .types import GeometryRecord, IntensityUnit, LabelMask, Volume

__all__ = [
    "CapacityError",
    "GeometryRecord",
    "IntensityUnit",
    "LabelMask",
    "NiftiFormatError",
    "OrientationError",
    "PayloadSizeError",
    "UnsupportedDatatypeError",
    "Volume",
    "VolumeIOError",
    "read_volume",
    "read_volume_file",
    "write_volume",
    "write_volume_file",
]
