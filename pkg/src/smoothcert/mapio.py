"""Binary attribution-map interchange format (RRSM).

Layout, all integers little-endian:

    bytes 0-3   magic "RRSM"
    bytes 4-5   version (u16), currently 1
    bytes 6-17  height, width, channels (u32 each)
    then        height*width*channels IEEE-754 float32, little-endian,
                row-major, channel-interleaved
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = [
    "MAGIC",
    "VERSION",
    "MapFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
    "DimMismatchError",
    "encode_map",
    "decode_map",
    "write_map",
    "read_map",
]

MAGIC = b"RRSM"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")


class MapFormatError(ValueError):
    """Base class for map-file parse failures."""


class BadMagicError(MapFormatError):
    pass


class UnsupportedVersionError(MapFormatError):
    pass


class TruncatedFileError(MapFormatError):
    def __init__(self, offset: int, needed: int, available: int):
        self.offset = offset
        super().__init__(
            f"truncated map file at byte offset {offset}: "
            f"needed {needed} more bytes, found {available}"
        )


class DimMismatchError(MapFormatError):
    pass


def encode_map(values: np.ndarray, dims: tuple[int, int, int]) -> bytes:
    h, w, c = (int(d) for d in dims)
    if h <= 0 or w <= 0 or c <= 0:
        raise DimMismatchError(f"dims must be positive, got {(h, w, c)}")
    values = np.asarray(values)
    if values.shape != (h * w * c,):
        raise DimMismatchError(f"value count {values.shape} does not match dims {(h, w, c)}")
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, h, w, c) + payload


def decode_map(blob: bytes) -> tuple[np.ndarray, tuple[int, int, int]]:
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(0, _HEADER.size, len(blob))
    magic, version, h, w, c = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported map version {version} (supported: {VERSION})")
    if h == 0 or w == 0 or c == 0:
        raise DimMismatchError(f"zero dimension in header: {(h, w, c)}")
    count = h * w * c
    needed = 4 * count
    available = len(blob) - _HEADER.size
    if available < needed:
        raise TruncatedFileError(_HEADER.size + available, needed - available, available)
    values = np.frombuffer(blob, dtype="<f4", count=count, offset=_HEADER.size)
    return values.astype(float), (h, w, c)


def write_map(path, values: np.ndarray, dims: tuple[int, int, int]) -> bytes:
    """Write the map file and return the exact bytes written."""
    blob = encode_map(values, dims)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob


def read_map(path) -> tuple[np.ndarray, tuple[int, int, int]]:
    with open(path, "rb") as fh:
        return decode_map(fh.read())
