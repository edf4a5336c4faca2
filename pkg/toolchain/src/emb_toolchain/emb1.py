"""EMB1 writer/reader implementing the engine's embedding-file interface.

Independent of the engine package on purpose: the two components share the
byte format, not code. Layout (little-endian): magic ``EMB1``, version byte
1, dtype byte 1 (float32), two reserved zero bytes, count u32, dim u32,
then count*dim float32 row-major. Writes are atomic (temp + rename).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError

_HEADER = struct.Struct("<4sBBHII")
MAGIC = b"EMB1"


def write_emb1(matrix: np.ndarray, path) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2 or matrix.shape[1] < 1:
        raise DataError(f"embedding matrix must be 2-D with dim >= 1, got {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise DataError("embedding matrix contains NaN or Inf entries")
    path = Path(path)
    blob = _HEADER.pack(MAGIC, 1, 1, 0, matrix.shape[0], matrix.shape[1]) + matrix.tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_emb1(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated EMB1 header")
    magic, version, dtype, reserved, count, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC or version != 1 or dtype != 1 or reserved != 0:
        raise DataError(f"{path}: not a readable EMB1 file")
    payload = blob[_HEADER.size:]
    if len(payload) != count * dim * 4:
        raise DataError(f"{path}: EMB1 payload length mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
