"""Binary field dumps.

Layout: magic ``b"CGF1"``, ``n`` as little-endian int64, ``R`` as little-endian
float64, then ``n*n`` complex samples in row-major order, each stored as two
little-endian float64 values (real, imaginary).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fieldops import Field

MAGIC = b"CGF1"


def dump_field(F: Field, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qd", F.n, F.R))
        fh.write(np.ascontiguousarray(F.values, dtype="<c16").tobytes())


def load_field(path) -> Field:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError("not a CGF1 field dump")
    n, R = struct.unpack("<qd", data[4:20])
    body = data[20:]
    if len(body) != 16 * n * n:
        raise ValueError("truncated field dump")
    vals = np.frombuffer(body, dtype="<c16").reshape(n, n)
    return Field(R, int(n), vals.astype(complex))
