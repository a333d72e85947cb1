"""The unit of work flowing from preprocessing into training and inference."""

from dataclasses import dataclass

from volume_io.types import GeometryRecord, IntensityUnit, LabelMask, Volume


@dataclass(frozen=True)
class PreprocessedCase:
    """A normalized network input with its optional mask and restoration geometry.

    Attributes:
        input: Normalized volume (values in [0, 1])
        mask: Ground-truth mask aligned with `input`, if known
        geometry: How `input` maps back onto the original scan
        case_id: Identifier used in reports (e.g. "case003_left")
    """

    input: Volume
    mask: LabelMask | None
    geometry: GeometryRecord
    case_id: str = ""

    def __post_init__(self):
        if self.input.intensity_unit != IntensityUnit.NORMALIZED:
            raise ValueError(f"case {self.case_id!r}: input must be normalized")
        if self.mask is not None and self.mask.dims != self.input.dims:
            raise ValueError(
                f"case {self.case_id!r}: mask dims {self.mask.dims} != input dims {self.input.dims}"
            )
        if self.geometry.processed_dims != self.input.dims:
            raise ValueError(
                f"case {self.case_id!r}: geometry describes {self.geometry.processed_dims}, "
                f"input is {self.input.dims}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.input.dims
