from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

MAX_BIT_DEPTH = 16


@dataclass(frozen=True, eq=False)
class Image:
    """An H x W x C grid of unsigned samples at a fixed bit depth.

    ``pixels`` is always stored as a C-contiguous ``uint16`` array of shape
    ``(height, width, channels)``.
    """

    pixels: np.ndarray
    bit_depth: int

    def __post_init__(self):
        if not 1 <= self.bit_depth <= MAX_BIT_DEPTH:
            raise DomainError(f"bit depth must be in [1, 16], got {self.bit_depth}")
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeError(f"expected a non-empty (H, W, C) array, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() > (1 << self.bit_depth) - 1):
            raise DomainError(
                f"samples must lie in [0, {(1 << self.bit_depth) - 1}] for {self.bit_depth}-bit images"
            )
        object.__setattr__(self, "pixels", np.ascontiguousarray(arr, dtype=np.uint16))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape

    @property
    def size(self) -> int:
        return self.pixels.size

    @property
    def maxval(self) -> int:
        return (1 << self.bit_depth) - 1

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.bit_depth == other.bit_depth and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        h, w, c = self.shape
        return f"Image({h}x{w}x{c}, {self.bit_depth}-bit)"

    @classmethod
    def random(cls, shape, bit_depth: int, rng: np.random.Generator) -> Image:
        """Uniform i.i.d. samples, mostly useful for tests and benchmarks."""
        return cls(rng.integers(0, 1 << bit_depth, size=shape, dtype=np.uint32), bit_depth)
