"""Minimal binary tensor container ("GFSB") for exchanging arrays between tools.

Layout (all integers little-endian):

    magic   4 bytes  b"GFSB"
    version u16      currently 1
    count   u32      number of entries
    entry*  name_len u16, name bytes (UTF-8), dtype u8, ndim u8,
            dims u32 * ndim, payload (row-major, little-endian)

Writes are byte-deterministic: identical entries produce identical files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"GFSB"
VERSION = 1

_DTYPE_CODE = {"f32": 0, "u8": 1, "i32": 2}
_CODE_DTYPE = {v: k for k, v in _DTYPE_CODE.items()}
_NP_DTYPE = {
    "f32": np.dtype("<f4"),
    "u8": np.dtype("u1"),
    "i32": np.dtype("<i4"),
}


class ContainerError(Exception):
    """Base class for container format errors."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedError(ContainerError):
    pass


class ShapeMismatchError(ContainerError):
    """Declared dims do not match the available payload bytes."""


class DuplicateNameError(ContainerError):
    pass


@dataclass(frozen=True)
class Tensor:
    """A named n-dimensional array with one of the supported dtypes."""

    name: str
    data: np.ndarray

    def __post_init__(self):
        if not self.name:
            raise ContainerError("tensor name must be non-empty")
        if self.dtype not in _DTYPE_CODE:
            raise ContainerError(f"unsupported dtype {self.data.dtype}")
        if not 1 <= self.data.ndim <= 4:
            raise ContainerError(f"ndim must be in [1, 4], got {self.data.ndim}")

    @property
    def dtype(self) -> str:
        kind = self.data.dtype
        if kind == np.float32:
            return "f32"
        if kind == np.uint8:
            return "u8"
        if kind == np.int32:
            return "i32"
        return str(kind)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)


def write_container(entries: list[Tensor], path) -> None:
    """Serialize tensors to *path*. Entry names must be unique."""
    names = [t.name for t in entries]
    if len(set(names)) != len(names):
        raise DuplicateNameError(f"duplicate tensor names in {names}")
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<HI", VERSION, len(entries))
    for t in entries:
        name = t.name.encode("utf-8")
        buf += struct.pack("<H", len(name))
        buf += name
        buf += struct.pack("<BB", _DTYPE_CODE[t.dtype], t.data.ndim)
        for d in t.data.shape:
            buf += struct.pack("<I", d)
        arr = np.ascontiguousarray(t.data, dtype=_NP_DTYPE[t.dtype])
        buf += arr.tobytes()
    with open(path, "wb") as f:
        f.write(buf)


def read_container(path) -> list[Tensor]:
    """Exact inverse of :func:`write_container`."""
    with open(path, "rb") as f:
        buf = f.read()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(buf):
            raise TruncatedError(f"file truncated while reading {what}")
        out = buf[pos:pos + n]
        pos += n
        return out

    if take(4, "magic") != MAGIC:
        raise BadMagicError("bad magic bytes, not a GFSB container")
    version, count = struct.unpack("<HI", take(6, "header"))
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")

    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        code, ndim = struct.unpack("<BB", take(2, "entry header"))
        if code not in _CODE_DTYPE:
            raise ContainerError(f"unknown dtype code {code} for entry {name!r}")
        if not 1 <= ndim <= 4:
            raise ContainerError(f"ndim {ndim} out of range for entry {name!r}")
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, "dims"))
        dt = _NP_DTYPE[_CODE_DTYPE[code]]
        nbytes = int(np.prod(dims)) * dt.itemsize
        payload = take(nbytes, f"payload of {name!r}")
        data = np.frombuffer(payload, dtype=dt).reshape(dims)
        if any(t.name == name for t in entries):
            raise DuplicateNameError(f"duplicate tensor name {name!r}")
        entries.append(Tensor(name, data.copy()))
    if pos != len(buf):
        raise ShapeMismatchError(
            f"{len(buf) - pos} trailing bytes after the declared entries")
    return entries


def read_map(path) -> dict[str, np.ndarray]:
    """Convenience: container entries as a name -> array dict."""
    return {t.name: t.data for t in read_container(path)}
