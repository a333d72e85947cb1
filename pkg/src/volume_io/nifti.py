"""Bit-exact NIfTI-1 single-file (.nii) codec.

Only the subset the pipeline needs is supported: little-endian headers,
int16 / uint8 / float32 payloads, no extensions, no compression, and
axis-aligned orientation (sform/qform translations become the origin).
"""

from enum import IntEnum
from pathlib import Path

import numpy as np

from common.logger import get_logger

from .errors import (
    CapacityError,
    NiftiFormatError,
    OrientationError,
    PayloadSizeError,
    UnsupportedDatatypeError,
)
from .types import IntensityUnit, LabelMask, Volume

logger = get_logger(__name__)

HEADER_SIZE = 348
DATA_OFFSET = 352  # header + 4-byte extension flag
MAGIC = b"n+1\x00"
MAX_DIM = np.iinfo(np.int16).max
XYZT_UNITS_MM = 2

# Written into `descrip` so that a round trip restores what kind of grid was saved.
_DESCRIP_PREFIX = "femurseg:"
_KIND_MASK = "mask"
_KIND_VOLUME = "volume"


class NiftiDatatype(IntEnum):
    """Supported NIfTI-1 datatype codes."""

    UINT8 = 2
    INT16 = 4
    FLOAT32 = 16


_NUMPY_DTYPES: dict[NiftiDatatype, np.dtype] = {
    NiftiDatatype.UINT8: np.dtype("<u1"),
    NiftiDatatype.INT16: np.dtype("<i2"),
    NiftiDatatype.FLOAT32: np.dtype("<f4"),
}

HEADER_DTYPE = np.dtype(
    [
        ("sizeof_hdr", "<i4"),  # 0; must be 348
        ("data_type", "S10"),  # 4; unused
        ("db_name", "S18"),  # 14; unused
        ("extents", "<i4"),  # 32; unused
        ("session_error", "<i2"),  # 36; unused
        ("regular", "S1"),  # 38; unused
        ("dim_info", "u1"),  # 39
        ("dim", "<i2", (8,)),  # 40; dim[0] = rank, dim[1..3] = nx, ny, nz
        ("intent_p1", "<f4"),  # 56
        ("intent_p2", "<f4"),  # 60
        ("intent_p3", "<f4"),  # 64
        ("intent_code", "<i2"),  # 68
        ("datatype", "<i2"),  # 70
        ("bitpix", "<i2"),  # 72
        ("slice_start", "<i2"),  # 74
        ("pixdim", "<f4", (8,)),  # 76; pixdim[1..3] = sx, sy, sz
        ("vox_offset", "<f4"),  # 108
        ("scl_slope", "<f4"),  # 112
        ("scl_inter", "<f4"),  # 116
        ("slice_end", "<i2"),  # 120
        ("slice_code", "u1"),  # 122
        ("xyzt_units", "u1"),  # 123
        ("cal_max", "<f4"),  # 124
        ("cal_min", "<f4"),  # 128
        ("slice_duration", "<f4"),  # 132
        ("toffset", "<f4"),  # 136
        ("glmax", "<i4"),  # 140
        ("glmin", "<i4"),  # 144
        ("descrip", "S80"),  # 148
        ("aux_file", "S24"),  # 228
        ("qform_code", "<i2"),  # 252
        ("sform_code", "<i2"),  # 254
        ("quatern_b", "<f4"),  # 256
        ("quatern_c", "<f4"),  # 260
        ("quatern_d", "<f4"),  # 264
        ("qoffset_x", "<f4"),  # 268
        ("qoffset_y", "<f4"),  # 272
        ("qoffset_z", "<f4"),  # 276
        ("srow_x", "<f4", (4,)),  # 280
        ("srow_y", "<f4", (4,)),  # 296
        ("srow_z", "<f4", (4,)),  # 312
        ("intent_name", "S16"),  # 328
        ("magic", "S4"),  # 344
    ]
)


def _finite(value) -> bool:
    return bool(np.isfinite(value))


def _parse_header(payload: bytes) -> np.void:
    if len(payload) < HEADER_SIZE:
        raise NiftiFormatError("sizeof_hdr", f"need {HEADER_SIZE} header bytes, got {len(payload)}")

    header = np.frombuffer(payload, dtype=HEADER_DTYPE, count=1)[0]

    sizeof_hdr = int(header["sizeof_hdr"])
    if sizeof_hdr != HEADER_SIZE:
        if int.from_bytes(payload[:4], "big", signed=True) == HEADER_SIZE:
            raise NiftiFormatError("sizeof_hdr", "big-endian header; only little-endian is supported")
        raise NiftiFormatError("sizeof_hdr", f"expected {HEADER_SIZE}, got {sizeof_hdr}")

    if payload[344:348] != MAGIC:
        raise NiftiFormatError("magic", f"expected {MAGIC!r}, got {payload[344:348]!r}")

    dim = header["dim"]
    if int(dim[0]) != 3:
        raise NiftiFormatError("dim", f"dim[0] must be 3, got {int(dim[0])}")
    if any(int(n) <= 0 for n in dim[1:4]):
        raise NiftiFormatError("dim", f"dim[1..3] must be positive, got {dim[1:4].tolist()}")

    return header


def _datatype(header: np.void) -> NiftiDatatype:
    code = int(header["datatype"])
    try:
        datatype = NiftiDatatype(code)
    except ValueError as e:
        raise UnsupportedDatatypeError(
            f"datatype code {code} is not one of int16 (4), uint8 (2), float32 (16)"
        ) from e
    bitpix = int(header["bitpix"])
    if bitpix != _NUMPY_DTYPES[datatype].itemsize * 8:
        raise NiftiFormatError("bitpix", f"{bitpix} does not match datatype {datatype.name}")
    return datatype


def _spacing(header: np.void) -> tuple[float, float, float]:
    pixdim = header["pixdim"]
    sx, sy, sz = (float(p) for p in pixdim[1:4])
    if not all(_finite(s) and s > 0 for s in (sx, sy, sz)):
        raise NiftiFormatError("pixdim", f"pixdim[1..3] must be positive, got {(sx, sy, sz)}")
    return (sz, sy, sx)


def _origin(header: np.void) -> tuple[float, float, float]:
    if int(header["sform_code"]) > 0:
        rows = np.stack([header["srow_x"], header["srow_y"], header["srow_z"]]).astype(np.float64)
        if not np.all(np.isfinite(rows)):
            raise NiftiFormatError("srow", "non-finite sform entries")
        linear = rows[:, :3]
        if np.any(linear[~np.eye(3, dtype=bool)] != 0):
            raise OrientationError("srow", "sform carries a rotation; only axis-aligned scans are supported")
        return (float(rows[2, 3]), float(rows[1, 3]), float(rows[0, 3]))

    if int(header["qform_code"]) > 0:
        quatern = [float(header[k]) for k in ("quatern_b", "quatern_c", "quatern_d")]
        offsets = [float(header[k]) for k in ("qoffset_z", "qoffset_y", "qoffset_x")]
        if not all(_finite(q) for q in quatern + offsets):
            raise NiftiFormatError("qform", "non-finite quaternion or offset")
        if any(q != 0 for q in quatern):
            raise OrientationError("quatern", "qform carries a rotation; only axis-aligned scans are supported")
        return tuple(offsets)

    return (0.0, 0.0, 0.0)


def _vox_offset(header: np.void) -> int:
    vox_offset = float(header["vox_offset"])
    if not _finite(vox_offset) or vox_offset < DATA_OFFSET or vox_offset != int(vox_offset):
        raise NiftiFormatError("vox_offset", f"must be an integer >= {DATA_OFFSET}, got {vox_offset}")
    return int(vox_offset)


def _scaling(header: np.void) -> tuple[float, float] | None:
    slope = float(header["scl_slope"])
    inter = float(header["scl_inter"])
    if not _finite(slope):
        raise NiftiFormatError("scl_slope", f"must be finite, got {slope}")
    if not _finite(inter):
        raise NiftiFormatError("scl_inter", f"must be finite, got {inter}")
    if slope == 0 or (slope == 1 and inter == 0):
        return None
    return slope, inter


def _descrip_tags(header: np.void) -> dict[str, str]:
    text = bytes(header["descrip"]).decode("ascii", errors="ignore")
    if not text.startswith(_DESCRIP_PREFIX):
        return {}
    tags = {}
    for item in text[len(_DESCRIP_PREFIX) :].split(";"):
        key, _, value = item.partition("=")
        if key:
            tags[key.strip()] = value.strip()
    return tags


def read_volume(payload: bytes) -> Volume | LabelMask:
    """Decode a NIfTI-1 byte sequence.

    Args:
        payload: Complete .nii file contents

    Returns:
        A LabelMask for uint8 payloads restricted to {0, 1} (unless the file
        was written as a volume), otherwise a Volume

    Raises:
        NiftiFormatError: Malformed header (the error names the field)
        UnsupportedDatatypeError: Datatype outside int16/uint8/float32
        PayloadSizeError: Payload shorter than the dims require
    """
    payload = bytes(payload)
    header = _parse_header(payload)
    datatype = _datatype(header)
    spacing = _spacing(header)
    origin = _origin(header)
    offset = _vox_offset(header)
    scaling = _scaling(header)

    nx, ny, nz = (int(n) for n in header["dim"][1:4])
    dtype = _NUMPY_DTYPES[datatype]
    count = nx * ny * nz
    needed = offset + count * dtype.itemsize
    if len(payload) < needed:
        raise PayloadSizeError(
            f"payload holds {len(payload)} bytes, dims {(nz, ny, nx)} need {needed}"
        )

    data = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(nz, ny, nx)
    data = data.astype(dtype.newbyteorder("="))
    if scaling is not None:
        slope, inter = scaling
        data = data.astype(np.float64) * slope + inter

    tags = _descrip_tags(header)
    try:
        if tags.get("kind") != _KIND_VOLUME and datatype == NiftiDatatype.UINT8 and scaling is None:
            if tags.get("kind") == _KIND_MASK or np.isin(data, (0, 1)).all():
                return LabelMask(data=data, spacing=spacing, origin=origin)
        unit = IntensityUnit(tags.get("unit", IntensityUnit.HU.value))
        return Volume(data=data, spacing=spacing, origin=origin, intensity_unit=unit)
    except ValueError as e:
        raise NiftiFormatError("payload", str(e)) from e


def _payload_dtype(grid: Volume | LabelMask) -> tuple[NiftiDatatype, np.ndarray]:
    if isinstance(grid, LabelMask):
        return NiftiDatatype.UINT8, grid.data
    data = grid.data
    if data.dtype == np.uint8:
        return NiftiDatatype.UINT8, data
    if data.dtype == np.int16:
        return NiftiDatatype.INT16, data
    if data.dtype == np.float32:
        return NiftiDatatype.FLOAT32, data
    raise UnsupportedDatatypeError(
        f"cannot store dtype {data.dtype} in int16/uint8/float32; convert the volume first"
    )


def write_volume(grid: Volume | LabelMask) -> bytes:
    """Encode a Volume or LabelMask as a NIfTI-1 byte sequence.

    Spacing and origin are stored as float32; values representable in float32
    survive a read/write round trip unchanged.

    Raises:
        CapacityError: A dimension exceeds the 16-bit dim field
        UnsupportedDatatypeError: Voxel dtype has no supported NIfTI code
    """
    nz, ny, nx = grid.dims
    if max(nx, ny, nz) > MAX_DIM:
        raise CapacityError(f"dims {grid.dims} exceed the NIfTI-1 limit of {MAX_DIM}")

    datatype, data = _payload_dtype(grid)
    dtype = _NUMPY_DTYPES[datatype]
    sz, sy, sx = grid.spacing
    oz, oy, ox = grid.origin

    header = np.zeros((), dtype=HEADER_DTYPE)
    header["sizeof_hdr"] = HEADER_SIZE
    header["regular"] = b"r"
    header["dim"] = [3, nx, ny, nz, 1, 1, 1, 1]
    header["datatype"] = int(datatype)
    header["bitpix"] = dtype.itemsize * 8
    header["pixdim"] = [1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0]
    header["vox_offset"] = DATA_OFFSET
    header["scl_slope"] = 1.0
    header["scl_inter"] = 0.0
    header["xyzt_units"] = XYZT_UNITS_MM
    header["qform_code"] = 1
    header["sform_code"] = 1
    header["qoffset_x"], header["qoffset_y"], header["qoffset_z"] = ox, oy, oz
    header["srow_x"] = [sx, 0.0, 0.0, ox]
    header["srow_y"] = [0.0, sy, 0.0, oy]
    header["srow_z"] = [0.0, 0.0, sz, oz]
    header["magic"] = MAGIC

    if isinstance(grid, LabelMask):
        descrip = f"{_DESCRIP_PREFIX}kind={_KIND_MASK}"
    else:
        descrip = f"{_DESCRIP_PREFIX}kind={_KIND_VOLUME};unit={grid.intensity_unit.value}"
    header["descrip"] = descrip.encode("ascii")

    extension_flag = b"\x00" * (DATA_OFFSET - HEADER_SIZE)
    return header.tobytes() + extension_flag + np.ascontiguousarray(data, dtype=dtype).tobytes()


def read_volume_file(path: Path) -> Volume | LabelMask:
    """Read a .nii file from disk."""
    logger.debug(f"Reading {path}")
    return read_volume(Path(path).read_bytes())


def write_volume_file(grid: Volume | LabelMask, path: Path) -> None:
    """Write a Volume or LabelMask to a .nii file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_volume(grid))
    logger.debug(f"Wrote {path}")
