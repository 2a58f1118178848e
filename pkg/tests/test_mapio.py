import struct

import numpy as np
import pytest

from smoothcert.mapio import (
    MAGIC,
    VERSION,
    BadMagicError,
    DimMismatchError,
    TruncatedFileError,
    UnsupportedVersionError,
    decode_map,
    encode_map,
    read_map,
    write_map,
)


def test_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=24).astype(np.float32).astype(float)
    path = tmp_path / "m.rrsm"
    write_map(path, values, (2, 4, 3))
    back, dims = read_map(path)
    assert dims == (2, 4, 3)
    assert np.array_equal(back, values)
    # a second write of what was read reproduces the same bytes
    assert write_map(path, back, dims) == encode_map(values, (2, 4, 3))


def test_truncated_file_reports_offset(tmp_path):
    blob = encode_map(np.arange(6, dtype=float), (2, 3, 1))
    cut = blob[: len(blob) - 5]
    with pytest.raises(TruncatedFileError) as exc:
        decode_map(cut)
    assert "byte offset" in str(exc.value)
    # truncation inside the header
    with pytest.raises(TruncatedFileError):
        decode_map(blob[:10])


def test_bad_magic_is_format_error():
    blob = b"NOPE" + encode_map(np.arange(4, dtype=float), (2, 2, 1))[4:]
    with pytest.raises(BadMagicError):
        decode_map(blob)


def test_unsupported_version(tmp_path):
    blob = bytearray(encode_map(np.arange(4, dtype=float), (2, 2, 1)))
    struct.pack_into("<H", blob, 4, VERSION + 1)
    with pytest.raises(UnsupportedVersionError):
        decode_map(bytes(blob))


def test_zero_dim_header_rejected():
    blob = bytearray(encode_map(np.arange(4, dtype=float), (2, 2, 1)))
    struct.pack_into("<I", blob, 6, 0)
    with pytest.raises(DimMismatchError):
        decode_map(bytes(blob))


def test_dim_mismatch_on_encode():
    with pytest.raises(DimMismatchError):
        encode_map(np.arange(5, dtype=float), (2, 2, 1))
    with pytest.raises(DimMismatchError):
        encode_map(np.arange(0, dtype=float), (0, 2, 1))


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_map(tmp_path / "absent.rrsm")


def test_header_layout_is_little_endian():
    blob = encode_map(np.array([1.0]), (1, 1, 1))
    assert blob[:4] == MAGIC
    assert blob[4:6] == (1).to_bytes(2, "little")
    assert blob[6:10] == (1).to_bytes(4, "little")
    assert blob[18:22] == struct.pack("<f", 1.0)
