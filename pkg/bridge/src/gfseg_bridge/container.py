"""Self-contained GFSB reader/writer.

The wire format is shared with the segmentation core but reimplemented here
on purpose: the adapter talks to the core only through files, never through
imports.

Layout (little-endian throughout):

    magic   4 bytes  b"GFSB"
    version u16      1
    count   u32
    entry*  name_len u16, name (UTF-8), dtype u8 (0=f32, 1=u8, 2=i32),
            ndim u8 (1..4), dims u32 * ndim, row-major payload
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"GFSB"
VERSION = 1

_DTYPES = {
    0: np.dtype("<f4"),
    1: np.dtype("u1"),
    2: np.dtype("<i4"),
}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.uint8): 1, np.dtype(np.int32): 2}


class ContainerError(Exception):
    pass


@dataclass(frozen=True)
class Tensor:
    name: str
    data: np.ndarray

    def __post_init__(self):
        if not self.name:
            raise ContainerError("tensor name must be non-empty")
        if np.dtype(self.data.dtype) not in _CODES:
            raise ContainerError(f"unsupported dtype {self.data.dtype}")
        if not 1 <= self.data.ndim <= 4:
            raise ContainerError(f"ndim must be in [1, 4], got {self.data.ndim}")


def write_container(entries: list[Tensor], path) -> None:
    names = [t.name for t in entries]
    if len(set(names)) != len(names):
        raise ContainerError(f"duplicate tensor names in {names}")
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<HI", VERSION, len(entries))
    for t in entries:
        name = t.name.encode("utf-8")
        buf += struct.pack("<H", len(name))
        buf += name
        code = _CODES[np.dtype(t.data.dtype)]
        buf += struct.pack("<BB", code, t.data.ndim)
        for d in t.data.shape:
            buf += struct.pack("<I", d)
        buf += np.ascontiguousarray(t.data, dtype=_DTYPES[code]).tobytes()
    with open(path, "wb") as f:
        f.write(buf)


def read_map(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        buf = f.read()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(buf):
            raise ContainerError(f"file truncated while reading {what}")
        out = buf[pos:pos + n]
        pos += n
        return out

    if take(4, "magic") != MAGIC:
        raise ContainerError("bad magic bytes, not a GFSB container")
    version, count = struct.unpack("<HI", take(6, "header"))
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        code, ndim = struct.unpack("<BB", take(2, "entry header"))
        if code not in _DTYPES or not 1 <= ndim <= 4:
            raise ContainerError(f"bad entry header for {name!r}")
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, "dims"))
        dt = _DTYPES[code]
        payload = take(int(np.prod(dims)) * dt.itemsize, f"payload of {name!r}")
        if name in out:
            raise ContainerError(f"duplicate tensor name {name!r}")
        out[name] = np.frombuffer(payload, dtype=dt).reshape(dims).copy()
    if pos != len(buf):
        raise ContainerError(f"{len(buf) - pos} trailing bytes")
    return out
