import numpy as np
import pytest

from preprocess import PreprocessedCase
from volume_io import GeometryRecord, IntensityUnit, LabelMask, Volume


def make_case(dims=(12, 12, 12), seed=0) -> PreprocessedCase:
    rng = np.random.default_rng(seed)
    image = rng.uniform(0.0, 1.0, size=dims)
    mask = np.zeros(dims, dtype=np.uint8)
    mask[3:9, 4:8, 2:10] = 1
    return PreprocessedCase(
        input=Volume(image, intensity_unit=IntensityUnit.NORMALIZED),
        mask=LabelMask(mask),
        geometry=GeometryRecord(original_dims=dims),
        case_id="sample",
    )


@pytest.fixture
def case():
    return make_case()
