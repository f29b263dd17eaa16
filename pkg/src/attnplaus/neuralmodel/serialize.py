"""Binary model file.

Layout (all integers little-endian)::

    magic      8 bytes  b"ATTNPLM\\0"
    version    uint32
    meta_len   uint32   followed by UTF-8 JSON {"config": ..., "vocab": [...]}
    n_tensors  uint32
    n_tensors x (name_len uint16, name, ndim uint8, ndim x uint64 shape)
    tensor data, float64 '<f8', in table order
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CorpusIOError, FormatError
from .network import ModelConfig, ModelParams, Vocab

MAGIC = b"ATTNPLM\x00"
VERSION = 1


def save_model(params: ModelParams, path) -> None:
    meta = json.dumps({"config": params.config.__dict__, "vocab": params.vocab.itos},
                      sort_keys=True).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta,
              struct.pack("<I", len(params.tensors))]
    for name, arr in params.tensors.items():
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    for arr in params.tensors.values():
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path) -> ModelParams:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusIOError(f"cannot read model {path}: {exc}") from exc
    if data[:8] != MAGIC:
        raise FormatError(f"{path}: not a model file")
    try:
        version, meta_len = struct.unpack_from("<II", data, 8)
        if version != VERSION:
            raise FormatError(f"{path}: unsupported model version {version}")
        pos = 16
        meta = json.loads(data[pos:pos + meta_len].decode("utf-8"))
        pos += meta_len
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        table = []
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + nlen].decode("utf-8")
            pos += nlen
            (ndim,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}Q", data, pos)
            pos += 8 * ndim
            table.append((name, shape))
        tensors = {}
        for name, shape in table:
            n = int(np.prod(shape, dtype=np.int64))
            arr = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shape)
            tensors[name] = arr.astype(np.float64)
            pos += 8 * n
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt model file ({exc})") from None
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return ModelParams(ModelConfig(**meta["config"]), Vocab(meta["vocab"]), tensors)
