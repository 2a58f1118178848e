"""RRSM writer: the binary attribution-map interchange format.

Layout, integers little-endian: magic "RRSM", version u16 (1), then height,
width, channels as u32, then h*w*c IEEE-754 float32 little-endian values,
row-major, channel-interleaved.  Kept deliberately dependency-free so the
exporter stays decoupled from any consumer.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"RRSM"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")


def encode(values: np.ndarray, dims: tuple[int, int, int]) -> bytes:
    h, w, c = (int(d) for d in dims)
    if h <= 0 or w <= 0 or c <= 0:
        raise ValueError(f"dims must be positive, got {(h, w, c)}")
    values = np.asarray(values)
    if values.size != h * w * c:
        raise ValueError(f"value count {values.size} does not match dims {(h, w, c)}")
    payload = np.ascontiguousarray(values.reshape(-1), dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, h, w, c) + payload


def write(path, values: np.ndarray, dims: tuple[int, int, int]) -> bytes:
    blob = encode(values, dims)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob
