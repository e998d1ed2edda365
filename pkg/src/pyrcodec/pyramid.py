"""Paired Pyramid decomposition: an exact, invertible multi-scale transform.

Each level halves one spatial axis (rows first, then alternating).  Of every
pair of adjacent rows (columns) the even-indexed member is kept unchanged as
the coarse component, and the odd member is replaced by its modulo-2^b
difference to the kept one, the fine component.  Fine samples therefore live
in the same range as the input and the pyramid holds exactly as many samples
as the image.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .image import MAX_BIT_DEPTH, Image


class Axis(enum.IntEnum):
    ROWS = 0
    COLS = 1

    @classmethod
    def for_level(cls, index: int) -> Axis:
        """Axis halved at 1-based pyramid level ``index``."""
        return cls.ROWS if index % 2 == 1 else cls.COLS


def _check_sample(value, bit_depth):
    if not 1 <= bit_depth <= MAX_BIT_DEPTH:
        raise DomainError(f"bit depth must be in [1, 16], got {bit_depth}")
    if not 0 <= value < (1 << bit_depth):
        raise DomainError(f"sample {value} outside [0, {(1 << bit_depth) - 1}]")


def mod_diff(x: int, y: int, bit_depth: int) -> int:
    """``(x - y) mod 2**bit_depth`` written as the two-case rule."""
    _check_sample(x, bit_depth)
    _check_sample(y, bit_depth)
    if x >= y:
        return x - y
    return (1 << bit_depth) - (y - x)


def mod_add(f: int, y: int, bit_depth: int) -> int:
    """Inverse of :func:`mod_diff`: ``(f + y) mod 2**bit_depth``."""
    _check_sample(f, bit_depth)
    _check_sample(y, bit_depth)
    return (f + y) % (1 << bit_depth)


def mod_diff_array(x: np.ndarray, y: np.ndarray, bit_depth: int) -> np.ndarray:
    x = x.astype(np.int32)
    y = y.astype(np.int32)
    return np.where(x >= y, x - y, (1 << bit_depth) - (y - x)).astype(np.uint16)


def mod_add_array(f: np.ndarray, y: np.ndarray, bit_depth: int) -> np.ndarray:
    return ((f.astype(np.int32) + y.astype(np.int32)) & ((1 << bit_depth) - 1)).astype(np.uint16)


def _split(arr: np.ndarray, axis: Axis):
    if axis is Axis.ROWS:
        return arr[0::2], arr[1::2]
    return arr[:, 0::2], arr[:, 1::2]


def decompose_step(img: Image, axis: Axis) -> tuple[Image, Image]:
    """Split ``img`` along ``axis`` into its (coarse, fine) pair."""
    axis = Axis(axis)
    extent = img.shape[axis]
    if extent % 2:
        raise ShapeError(f"cannot halve odd extent {extent} along {axis.name.lower()}")
    retained, removed = _split(img.pixels, axis)
    fine = mod_diff_array(removed, retained, img.bit_depth)
    return Image(retained, img.bit_depth), Image(fine, img.bit_depth)


def reconstruct_step(coarse: Image, fine: Image, axis: Axis) -> Image:
    """Undo :func:`decompose_step`, re-interleaving the restored rows/columns."""
    axis = Axis(axis)
    if coarse.shape != fine.shape or coarse.bit_depth != fine.bit_depth:
        raise ShapeError(
            f"coarse {coarse!r} and fine {fine!r} must share shape and bit depth"
        )
    removed = mod_add_array(fine.pixels, coarse.pixels, coarse.bit_depth)
    h, w, c = coarse.shape
    if axis is Axis.ROWS:
        out = np.empty((2 * h, w, c), dtype=np.uint16)
    else:
        out = np.empty((h, 2 * w, c), dtype=np.uint16)
    even, odd = _split(out, axis)
    even[...] = coarse.pixels
    odd[...] = removed
    return Image(out, coarse.bit_depth)


@dataclass(frozen=True)
class PyramidLevel:
    index: int
    axis: Axis
    fine: Image
    coarse_shape: tuple[int, int, int]


@dataclass(frozen=True)
class PairedPyramid:
    levels: list[PyramidLevel]
    coarsest: Image
    original_shape: tuple[int, int, int]
    bit_depth: int
    # coarse images I_1..I_L, kept only when built with keep_coarse=True
    coarse: list[Image] = field(default_factory=list, repr=False, compare=False)

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def fine(self) -> list[Image]:
        return [lvl.fine for lvl in self.levels]

    def sample_count(self) -> int:
        return sum(lvl.fine.size for lvl in self.levels) + self.coarsest.size


def level_shapes(shape, num_levels: int) -> list[tuple[int, int, int]]:
    """Coarse shapes ``I_1..I_L`` for an image of ``shape``.

    Raises :class:`ShapeError` naming the first level whose axis extent is odd.
    """
    h, w, c = shape
    shapes = []
    for i in range(1, num_levels + 1):
        axis = Axis.for_level(i)
        extent = h if axis is Axis.ROWS else w
        if extent % 2:
            raise ShapeError(
                f"level {i} halves {axis.name.lower()} but the extent there is {extent} (odd); "
                f"an image of {shape[0]}x{shape[1]} supports at most {max_levels(shape)} levels"
            )
        if axis is Axis.ROWS:
            h //= 2
        else:
            w //= 2
        shapes.append((h, w, c))
    return shapes


def max_levels(shape) -> int:
    """Largest L for which every step halves an even extent."""
    h, w = shape[0], shape[1]
    n = 0
    while True:
        axis = Axis.for_level(n + 1)
        extent = h if axis is Axis.ROWS else w
        if extent % 2:
            return n
        if axis is Axis.ROWS:
            h //= 2
        else:
            w //= 2
        n += 1


def auto_levels(shape, target: int = 4) -> int:
    """Number of levels that brings the coarsest image down to ``target`` pixels per side.

    Levels are added while the halved extent stays ``>= target``; a 2^k x 2^k
    image therefore ends at ``target x target`` (L = 12 for 256 x 256 and
    L = 16 for 1024 x 1024 with the default of 4).
    """
    h, w = shape[0], shape[1]
    n = 0
    while True:
        axis = Axis.for_level(n + 1)
        extent = h if axis is Axis.ROWS else w
        if extent % 2 or extent // 2 < target:
            return n
        if axis is Axis.ROWS:
            h //= 2
        else:
            w //= 2
        n += 1


def build_pyramid(img: Image, num_levels: int, keep_coarse: bool = False) -> PairedPyramid:
    if num_levels < 0:
        raise DomainError(f"level count must be non-negative, got {num_levels}")
    level_shapes(img.shape, num_levels)
    levels = []
    coarse_chain = []
    current = img
    for i in range(1, num_levels + 1):
        axis = Axis.for_level(i)
        current, fine = decompose_step(current, axis)
        levels.append(PyramidLevel(i, axis, fine, current.shape))
        if keep_coarse:
            coarse_chain.append(current)
    return PairedPyramid(levels, current, img.shape, img.bit_depth, coarse_chain)


def invert_pyramid(pyr: PairedPyramid) -> Image:
    expected = level_shapes(pyr.original_shape, pyr.num_levels)
    if pyr.num_levels and expected[-1] != pyr.coarsest.shape:
        raise ShapeError(f"coarsest shape {pyr.coarsest.shape} does not match {expected[-1]}")
    if not pyr.num_levels and pyr.coarsest.shape != tuple(pyr.original_shape):
        raise ShapeError("a zero-level pyramid must hold the original image as its coarsest")
    current = pyr.coarsest
    for lvl in reversed(pyr.levels):
        if lvl.fine.shape != current.shape or lvl.axis != Axis.for_level(lvl.index):
            raise ShapeError(f"level {lvl.index} is inconsistent with the coarse chain")
        current = reconstruct_step(current, lvl.fine, lvl.axis)
    return current
