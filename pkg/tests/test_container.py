import struct

import numpy as np
import pytest

from gfseg.container import (BadMagicError, ContainerError, DuplicateNameError,
                             ShapeMismatchError, Tensor, TruncatedError,
                             UnsupportedVersionError, read_container,
                             write_container)


def rand_tensor(rng, name):
    dtype = rng.choice(["f32", "u8", "i32"])
    ndim = int(rng.integers(1, 5))
    dims = tuple(int(rng.integers(1, 6)) for _ in range(ndim))
    if dtype == "f32":
        data = rng.normal(size=dims).astype(np.float32)
    elif dtype == "u8":
        data = rng.integers(0, 256, size=dims).astype(np.uint8)
    else:
        data = rng.integers(-1000, 1000, size=dims).astype(np.int32)
    return Tensor(name, data)


def test_empty_container_layout(tmp_path):
    path = tmp_path / "empty.gfsb"
    write_container([], path)
    raw = path.read_bytes()
    # magic(4) + version u16 + count u32
    assert raw == b"GFSB" + struct.pack("<HI", 1, 0)
    assert read_container(path) == []


def test_single_tensor_byte_count(tmp_path):
    path = tmp_path / "one.gfsb"
    write_container([Tensor("t", np.array([1.0, 2.0], dtype=np.float32))], path)
    # header 10 + name_len 2 + name 1 + dtype 1 + ndim 1 + dim 4 + payload 8
    assert path.stat().st_size == 10 + 2 + 1 + 1 + 1 + 4 + 8


def test_round_trip_identity(tmp_path):
    rng = np.random.default_rng(0)
    entries = [rand_tensor(rng, f"t{i}") for i in range(10)]
    path = tmp_path / "rt.gfsb"
    write_container(entries, path)
    back = read_container(path)
    assert [t.name for t in back] == [t.name for t in entries]
    for a, b in zip(entries, back):
        assert a.dtype == b.dtype
        np.testing.assert_array_equal(a.data, b.data)


def test_write_is_byte_deterministic(tmp_path):
    rng = np.random.default_rng(1)
    entries = [rand_tensor(rng, f"t{i}") for i in range(5)]
    p1, p2 = tmp_path / "a.gfsb", tmp_path / "b.gfsb"
    write_container(entries, p1)
    write_container(entries, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_duplicate_names_rejected(tmp_path):
    t = Tensor("x", np.zeros(3, dtype=np.float32))
    with pytest.raises(DuplicateNameError):
        write_container([t, t], tmp_path / "dup.gfsb")


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.gfsb"
    path.write_bytes(b"XXXX" + struct.pack("<HI", 1, 0))
    with pytest.raises(BadMagicError):
        read_container(path)


def test_unsupported_version(tmp_path):
    path = tmp_path / "v9.gfsb"
    path.write_bytes(b"GFSB" + struct.pack("<HI", 9, 0))
    with pytest.raises(UnsupportedVersionError):
        read_container(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "full.gfsb"
    write_container([Tensor("t", np.arange(8, dtype=np.int32))], path)
    raw = path.read_bytes()
    trunc = tmp_path / "trunc.gfsb"
    trunc.write_bytes(raw[:-5])
    with pytest.raises(TruncatedError):
        read_container(trunc)


def test_trailing_bytes_detected(tmp_path):
    path = tmp_path / "full.gfsb"
    write_container([Tensor("t", np.arange(8, dtype=np.int32))], path)
    bloated = tmp_path / "bloat.gfsb"
    bloated.write_bytes(path.read_bytes() + b"\x00\x01")
    with pytest.raises(ShapeMismatchError):
        read_container(bloated)


def test_unknown_dtype_code(tmp_path):
    path = tmp_path / "dt.gfsb"
    body = struct.pack("<H", 1) + b"t" + struct.pack("<BB", 7, 1) + struct.pack("<I", 0)
    path.write_bytes(b"GFSB" + struct.pack("<HI", 1, 1) + body)
    with pytest.raises(ContainerError):
        read_container(path)


def test_invalid_tensor_rejected():
    with pytest.raises(ContainerError):
        Tensor("", np.zeros(3, dtype=np.float32))
    with pytest.raises(ContainerError):
        Tensor("t", np.zeros((1, 1, 1, 1, 1), dtype=np.float32))
    with pytest.raises(ContainerError):
        Tensor("t", np.zeros(3, dtype=np.float64))


def test_randomized_round_trips(tmp_path):
    rng = np.random.default_rng(42)
    path = tmp_path / "r.gfsb"
    for trial in range(100):
        entries = [rand_tensor(rng, f"e{trial}_{i}")
                   for i in range(int(rng.integers(0, 5)))]
        write_container(entries, path)
        back = read_container(path)
        assert len(back) == len(entries)
        for a, b in zip(entries, back):
            assert (a.name, a.dtype, a.dims) == (b.name, b.dtype, b.dims)
            np.testing.assert_array_equal(a.data, b.data)
