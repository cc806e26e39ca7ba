"""WIINN1 checkpoint files: spec text, seed record, then float32 tensors."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError, DatasetTruncatedError
from .model import NetworkParams, NetworkSpec, _param_shapes

MAGIC = b"WIINN1"
_HEAD = struct.Struct("<IqI")  # spec text length, seed, scheme text length


def to_float32(params: NetworkParams) -> NetworkParams:
    """Round every tensor to float32 precision (kept as float64 arrays)."""
    return NetworkParams({k: v.astype(np.float32).astype(np.float64) for k, v in params.tensors.items()},
                         params.init_scheme, params.seed)


def save_checkpoint(path, spec: NetworkSpec, params: NetworkParams) -> None:
    spec_text = spec.to_text().encode()
    scheme = params.init_scheme.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEAD.pack(len(spec_text), params.seed, len(scheme)))
        fh.write(spec_text)
        fh.write(scheme)
        for name, shape in _param_shapes(spec):
            t = params[name]
            if t.shape != shape:
                raise DatasetFormatError(f"{name} has shape {t.shape}, spec wants {shape}")
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[NetworkSpec, NetworkParams]:
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise DatasetFormatError(f"{path}: not a WIINN1 checkpoint")
    pos = len(MAGIC)
    if len(data) < pos + _HEAD.size:
        raise DatasetTruncatedError(f"{path}: truncated header")
    spec_len, seed, scheme_len = _HEAD.unpack_from(data, pos)
    pos += _HEAD.size
    spec = NetworkSpec.from_text(data[pos:pos + spec_len].decode())
    pos += spec_len
    scheme = data[pos:pos + scheme_len].decode()
    pos += scheme_len
    tensors = {}
    for name, shape in _param_shapes(spec):
        nbytes = 4 * int(np.prod(shape))
        if len(data) < pos + nbytes:
            raise DatasetTruncatedError(f"{path}: truncated at tensor {name}")
        tensors[name] = np.frombuffer(data, "<f4", int(np.prod(shape)), pos).reshape(shape).astype(np.float64)
        pos += nbytes
    if pos != len(data):
        raise DatasetFormatError(f"{path}: {len(data) - pos} trailing bytes")
    return spec, NetworkParams(tensors, scheme, seed)
