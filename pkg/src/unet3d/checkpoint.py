"""Versioned binary checkpoint container.

Layout (little-endian):
    magic      8 bytes  b"FSEGCKPT"
    version    uint32
    header_len uint32
    header     JSON (architecture, patch size, Adam step, tensor names and shapes)
    blobs      float64 tensors in header order
    checksum   SHA-256 of everything above
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from common.errors import ConfigurationError
from common.logger import get_logger

from .config import UNetConfig
from .errors import CheckpointError, CompatibilityError
from .model import UNetModel

logger = get_logger(__name__)

MAGIC = b"FSEGCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")
_DIGEST_SIZE = 32


def _tensors(model: UNetModel) -> dict[str, np.ndarray]:
    tensors = dict(model.parameters())
    for name, state in model.batchnorm_states().items():
        tensors[f"{name}.running_mean"] = state.running_mean
        tensors[f"{name}.running_var"] = state.running_var
    for name, m in model.adam_state.m.items():
        tensors[f"adam.m.{name}"] = m
    for name, v in model.adam_state.v.items():
        tensors[f"adam.v.{name}"] = v
    return tensors


def encode_checkpoint(model: UNetModel) -> bytes:
    tensors = _tensors(model)
    header = {
        "unet": model.config.to_dict(),
        "patch_size": list(model.patch_size) if model.patch_size else None,
        "adam_step": model.adam_state.step,
        "batchnorm_initialized": {
            name: state.initialized for name, state in model.batchnorm_states().items()
        },
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in tensors.items()],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    body = b"".join(
        [
            _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)),
            header_bytes,
            *(np.asarray(t, dtype="<f8").tobytes() for t in tensors.values()),
        ]
    )
    return body + hashlib.sha256(body).digest()


def _assign(target: np.ndarray, name: str, value: np.ndarray) -> None:
    if target.shape != value.shape:
        raise CompatibilityError(
            f"tensor {name!r} has shape {value.shape}, network expects {target.shape}"
        )
    target[...] = value


def decode_checkpoint(payload: bytes, expected: UNetConfig | None = None) -> UNetModel:
    """Rebuild a model from checkpoint bytes.

    Raises:
        CheckpointError: truncated payload, wrong magic or version, bad checksum
        CompatibilityError: architecture differs from `expected`, or a tensor
            shape or name does not fit the architecture
    """
    if len(payload) < _PREFIX.size + _DIGEST_SIZE:
        raise CheckpointError(f"checkpoint too short ({len(payload)} bytes)")
    body, digest = payload[:-_DIGEST_SIZE], payload[-_DIGEST_SIZE:]
    magic, version, header_len = _PREFIX.unpack_from(body)
    if magic != MAGIC:
        raise CheckpointError("not a femur-seg checkpoint (bad magic)")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch")

    try:
        header = json.loads(body[_PREFIX.size : _PREFIX.size + header_len].decode("utf-8"))
        config = UNetConfig(**header["unet"])
        entries = [(e["name"], tuple(e["shape"])) for e in header["tensors"]]
    except (ValueError, KeyError, TypeError, ConfigurationError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}") from e
    if expected is not None and config != expected:
        raise CompatibilityError(f"checkpoint architecture {config} != expected {expected}")

    model = UNetModel(config)
    model.patch_size = tuple(header["patch_size"]) if header.get("patch_size") else None
    model.adam_state.step = int(header.get("adam_step", 0))
    params = model.parameters()
    states = model.batchnorm_states()

    offset = _PREFIX.size + header_len
    seen = set()
    for name, shape in entries:
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(body):
            raise CheckpointError(f"checkpoint truncated inside tensor {name!r}")
        value = np.frombuffer(body[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        offset = end
        seen.add(name)

        if name in params:
            _assign(params[name], name, value)
        elif name.startswith(("adam.m.", "adam.v.")):
            moments = model.adam_state.m if name.startswith("adam.m.") else model.adam_state.v
            param_name = name[len("adam.m.") :]
            if param_name not in params:
                raise CompatibilityError(f"Adam moment for unknown parameter {param_name!r}")
            moments[param_name] = np.zeros_like(params[param_name])
            _assign(moments[param_name], name, value)
        elif name.endswith((".running_mean", ".running_var")):
            layer, _, stat = name.rpartition(".")
            if layer not in states:
                raise CompatibilityError(f"unknown batch-norm layer {layer!r}")
            _assign(getattr(states[layer], stat), name, value)
        else:
            raise CompatibilityError(f"unexpected tensor {name!r}")

    if offset != len(body):
        raise CheckpointError(f"{len(body) - offset} trailing bytes after the last tensor")
    missing = set(params) - seen
    if missing:
        raise CompatibilityError(f"checkpoint lacks parameters: {sorted(missing)[:5]}")
    for name, initialized in header.get("batchnorm_initialized", {}).items():
        if name in states:
            states[name].initialized = bool(initialized)
    return model


def save_checkpoint(model: UNetModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model))
    logger.debug(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: str | Path, expected: UNetConfig | None = None) -> UNetModel:
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(payload, expected)
