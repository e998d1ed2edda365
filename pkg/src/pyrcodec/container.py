"""Uncompressed storage of a paired pyramid.

Layout, little-endian::

    "PPYR"  version:u8  height:u32  width:u32  channels:u8  bit_depth:u8  L:u8
    L x (axis:u8, fine samples)   coarsest samples

Samples take one byte for b <= 8 and two bytes otherwise, row-major with
channels innermost.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, ShapeError
from .image import Image
from .pyramid import Axis, PairedPyramid, PyramidLevel, level_shapes

MAGIC = b"PPYR"
VERSION = 1
_HEAD = struct.Struct("<4sBIIBBB")


def _dtype(bit_depth):
    return np.dtype("u1") if bit_depth <= 8 else np.dtype("<u2")


def dump_pyramid(pyr: PairedPyramid) -> bytes:
    h, w, c = pyr.original_shape
    out = bytearray(_HEAD.pack(MAGIC, VERSION, h, w, c, pyr.bit_depth, pyr.num_levels))
    dtype = _dtype(pyr.bit_depth)
    for lvl in pyr.levels:
        out.append(int(lvl.axis))
        out += lvl.fine.pixels.astype(dtype).tobytes()
    out += pyr.coarsest.pixels.astype(dtype).tobytes()
    return bytes(out)


def load_pyramid(data: bytes) -> PairedPyramid:
    if len(data) < _HEAD.size:
        raise FormatError("truncated container header")
    magic, version, h, w, c, b, num_levels = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"not a PPYR container (magic {magic!r})")
    if version != VERSION:
        raise FormatError(f"unsupported PPYR container version {version} (this build reads version {VERSION})")
    if not 1 <= b <= 16 or min(h, w, c) < 1:
        raise FormatError("corrupt container header")
    try:
        shapes = level_shapes((h, w, c), num_levels)
    except ShapeError as exc:
        raise FormatError(f"container shape chain is invalid: {exc}") from None
    dtype = _dtype(b)
    pos = _HEAD.size

    def take(shape):
        nonlocal pos
        n = int(np.prod(shape)) * dtype.itemsize
        if pos + n > len(data):
            raise FormatError(f"truncated container: need {pos + n} bytes, have {len(data)}")
        arr = np.frombuffer(data, dtype=dtype, count=n // dtype.itemsize, offset=pos).reshape(shape)
        pos += n
        try:
            return Image(arr.astype(np.uint16), b)
        except ValueError as exc:
            raise FormatError(f"invalid samples in container: {exc}") from None

    levels = []
    for i, shape in enumerate(shapes, start=1):
        if pos >= len(data):
            raise FormatError("truncated container")
        axis = data[pos]
        pos += 1
        if axis != Axis.for_level(i):
            raise FormatError(f"level {i} stores axis {axis}, expected {int(Axis.for_level(i))}")
        levels.append(PyramidLevel(i, Axis(axis), take(shape), shape))
    coarsest = take(shapes[-1] if shapes else (h, w, c))
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after container payload")
    return PairedPyramid(levels, coarsest, (h, w, c), b)
