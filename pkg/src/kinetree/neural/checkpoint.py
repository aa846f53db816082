"""Binary parameter checkpoints.

Layout (all integers little-endian):

    magic   4 bytes  b"KTNN"
    version u32      currently 1
    then, per parameter in registration order:
      name_len u32, name UTF-8, rank u32, dims u32 * rank,
      data float32 little-endian, row-major

Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError, VersionError
from .tensor import ParameterSet

MAGIC = b"KTNN"
VERSION = 1


def save_params(params: ParameterSet, path: str | Path,
                trainable_flags: bool = True) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name in params.names():
        data = np.ascontiguousarray(params[name].data, dtype="<f4")
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path: str | Path) -> ParameterSet:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise VersionError(f"{path}: unsupported checkpoint version {version}")
    off = 8
    params = ParameterSet()
    while off < len(raw):
        try:
            (name_len,) = struct.unpack_from("<I", raw, off)
            off += 4
            name = raw[off : off + name_len].decode("utf-8")
            off += name_len
            (rank,) = struct.unpack_from("<I", raw, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}I", raw, off)
            off += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            data = np.frombuffer(raw, dtype="<f4", count=count, offset=off)
            off += 4 * count
        except (struct.error, ValueError) as e:
            raise DataError(f"{path}: truncated checkpoint ({e})") from e
        params.add(name, data.reshape(dims).astype(np.float32))
    return params
