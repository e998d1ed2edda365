"""Squeeze rearrangement, coding-order plans and critical-path counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError


def _check_divisible(h, w, n):
    if n < 0:
        raise DomainError(f"squeeze count must be non-negative, got {n}")
    block = 1 << n
    if h % block or w % block:
        raise ShapeError(f"{h}x{w} grid is not divisible by 2^{n} = {block}")


def squeeze(arr: np.ndarray, n: int = 1) -> np.ndarray:
    """Stack 2x2 spatial blocks into channels, ``n`` times.

    One application maps ``(H, W, C)`` to ``(H/2, W/2, 4C)``; the sample at
    ``(r, c, ch)`` lands at ``(r//2, c//2, (2*(r%2) + c%2) * C + ch)``, so the
    block order is TL, TR, BL, BR.
    """
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w, _ = arr.shape
    _check_divisible(h, w, n)
    for _ in range(n):
        h, w, c = arr.shape
        arr = arr.reshape(h // 2, 2, w // 2, 2, c).transpose(0, 2, 1, 3, 4).reshape(h // 2, w // 2, 4 * c)
    return arr


def unsqueeze(arr: np.ndarray, n: int = 1) -> np.ndarray:
    """Exact inverse of :func:`squeeze`."""
    arr = np.asarray(arr)
    if n < 0:
        raise DomainError(f"squeeze count must be non-negative, got {n}")
    for _ in range(n):
        h, w, c = arr.shape
        if c % 4:
            raise ShapeError(f"cannot unsqueeze {c} channels")
        arr = arr.reshape(h, w, 2, 2, c // 4).transpose(0, 2, 1, 3, 4).reshape(2 * h, 2 * w, c // 4)
    return arr


@dataclass(frozen=True)
class ScanPlan:
    """An ordered partition of an H x W grid into coding groups.

    Groups are coded one after another; pixels inside a group only condition
    on earlier groups.  ``group_map[r, c]`` is the index of the group that
    contains ``(r, c)`` and ``order`` lists all pixels group by group,
    row-major inside each group.
    """

    height: int
    width: int
    n_squeeze: int
    group_map: np.ndarray
    order: np.ndarray
    raster: bool = False

    @property
    def num_groups(self) -> int:
        return int(self.group_map.max()) + 1 if self.group_map.size else 0

    @property
    def groups(self) -> list[np.ndarray]:
        sizes = np.bincount(self.group_map.ravel(), minlength=self.num_groups)
        return np.split(self.order, np.cumsum(sizes)[:-1])


def make_scan_plan(height: int, width: int, n_squeeze: int) -> ScanPlan:
    """Partial-autoregressive plan with ``4**n_squeeze`` groups.

    Group ``s`` is the ``s``-th channel of the grid after ``n_squeeze``
    squeezes, i.e. sub-images are ordered lexicographically by their block
    index with the last (outermost) squeeze most significant.
    """
    _check_divisible(height, width, n_squeeze)
    index = np.arange(height * width, dtype=np.int64).reshape(height, width)
    stacked = squeeze(index, n_squeeze)
    # channel s of the squeezed grid holds the flat indices of sub-image s, row-major
    order_flat = np.ascontiguousarray(stacked.transpose(2, 0, 1)).ravel()
    group_of = np.repeat(np.arange(stacked.shape[2], dtype=np.int32), stacked.shape[0] * stacked.shape[1])
    group_map = np.empty(height * width, dtype=np.int32)
    group_map[order_flat] = group_of
    order = np.stack(np.divmod(order_flat, width), axis=1).astype(np.int32)
    return ScanPlan(height, width, n_squeeze, group_map.reshape(height, width), order)


def raster_plan(height: int, width: int) -> ScanPlan:
    """Fully sequential plan: one pixel per group in row-major order."""
    if height < 1 or width < 1:
        raise ShapeError(f"empty grid {height}x{width}")
    group_map = np.arange(height * width, dtype=np.int32).reshape(height, width)
    rr, cc = np.divmod(np.arange(height * width), width)
    order = np.stack([rr, cc], axis=1).astype(np.int32)
    return ScanPlan(height, width, 0, group_map, order, raster=True)


def max_squeeze(height: int, width: int, requested: int) -> int:
    """Largest ``n <= requested`` such that both extents are divisible by ``2**n``."""
    n = 0
    while n < requested and height % (2 << n) == 0 and width % (2 << n) == 0:
        n += 1
    return n


@dataclass(frozen=True)
class CriticalPathReport:
    num_levels: int
    per_level_steps: list[int]
    total_steps: int

    def rows(self):
        """``(level, steps)`` pairs, fine levels first and the coarsest last."""
        return [(i + 1, t) for i, t in enumerate(self.per_level_steps)]


def _log2_exact(value, name):
    if value < 1 or value & (value - 1):
        raise DomainError(f"{name} must be a power of two, got {value}")
    return value.bit_length() - 1


def critical_path(n0: int, coarsest: int, n_squeeze) -> CriticalPathReport:
    """Sequential step count for sampling an ``n0 x n0`` image.

    The coarsest ``coarsest x coarsest`` image is generated pixel by pixel,
    every other level contributes one step per sub-image, ``4**n_squeeze``.
    With ``L = 2 log2(n0 / coarsest)`` the total is
    ``coarsest**2 + sum(4**n_i for i in 1..L-1)``.

    ``n_squeeze`` is either one integer applied to every level or a list of
    length ``L - 1``.
    """
    a = _log2_exact(n0, "n0")
    b = _log2_exact(coarsest, "coarsest extent")
    if b > a:
        raise DomainError(f"coarsest extent {coarsest} exceeds n0 = {n0}")
    num_levels = 2 * (a - b)
    finer = max(num_levels - 1, 0)
    if np.isscalar(n_squeeze):
        squeezes = [int(n_squeeze)] * finer
    else:
        squeezes = [int(s) for s in n_squeeze]
        if len(squeezes) != finer:
            raise DomainError(f"expected {finer} squeeze counts, got {len(squeezes)}")
    if any(s < 0 for s in squeezes):
        raise DomainError("squeeze counts must be non-negative")
    steps = [4**s for s in squeezes] + [coarsest * coarsest]
    return CriticalPathReport(num_levels, steps, sum(steps))
