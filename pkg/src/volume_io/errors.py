"""Exceptions raised while reading or writing NIfTI volumes."""

from common.errors import FemurSegError


class VolumeIOError(FemurSegError):
    """Base exception for volume ingestion and emission."""

    pass


class NiftiFormatError(VolumeIOError):
    """Malformed header; `field` names the offending header field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class OrientationError(NiftiFormatError):
    """Orientation matrix carries a rotation (only axis-aligned scans are accepted)."""

    pass


class UnsupportedDatatypeError(VolumeIOError):
    """Datatype code outside int16 / uint8 / float32."""

    pass


class PayloadSizeError(VolumeIOError):
    """Byte payload shorter than the header's dims require."""

    pass


class CapacityError(VolumeIOError):
    """Grid dims do not fit the 16-bit NIfTI dim fields."""

    pass
