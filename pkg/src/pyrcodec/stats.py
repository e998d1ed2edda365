"""Empirical statistics of images and pyramid components.

Marginal entropy pools every sample of a collection into one histogram;
mutual information between pixels at a given lag is the plug-in estimate
over the joint histogram of all pixel pairs at that lag, with channels and
images pooled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .image import Image
from .pyramid import build_pyramid


@dataclass
class Histogram:
    """Counts of each sample value at a given bit depth."""

    counts: np.ndarray
    bit_depth: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (1 << self.bit_depth,):
            raise DomainError(f"expected {1 << self.bit_depth} bins, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise DomainError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def of(cls, values, bit_depth: int) -> Histogram:
        values = np.asarray(values).ravel()
        return cls(np.bincount(values, minlength=1 << bit_depth)[: 1 << bit_depth], bit_depth)

    def merge(self, other: Histogram) -> Histogram:
        if other.bit_depth != self.bit_depth:
            raise DomainError("cannot merge histograms of different bit depths")
        return Histogram(self.counts + other.counts, self.bit_depth)

    def entropy(self) -> float:
        if self.total == 0:
            raise DomainError("entropy of an empty histogram")
        return entropy_of_counts(self.counts)


def entropy_of_counts(counts) -> float:
    counts = np.asarray(counts)
    p = counts[counts > 0] / counts.sum()
    return float(max(-(p * np.log2(p)).sum(), 0.0))


def _common_depth(images):
    images = list(images)
    if not images:
        raise DomainError("empty image collection")
    depths = {img.bit_depth for img in images}
    if len(depths) != 1:
        raise DomainError(f"mixed bit depths {sorted(depths)}")
    return images, depths.pop()


def pooled_histogram(images) -> Histogram:
    images, b = _common_depth(images)
    hist = Histogram(np.zeros(1 << b, dtype=np.int64), b)
    for img in images:
        hist = hist.merge(Histogram.of(img.pixels, b))
    return hist


def marginal_entropy(images) -> float:
    """Shannon entropy in bits of the pooled per-sample histogram."""
    return pooled_histogram(images).entropy()


def _level_labels(num_levels):
    return ["original"] + [f"F{i}" for i in range(1, num_levels + 1)] + [f"I{num_levels}"]


def pyramid_entropy_profile(images, num_levels: int) -> list[tuple[str, float]]:
    """Entropy of the originals, of every fine component and of the coarsest image.

    All images must share shape and bit depth.  Labels are ``original``,
    ``F1`` .. ``FL`` and ``IL``.
    """
    images, b = _common_depth(images)
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ShapeError(f"images must share one shape, got {sorted(shapes)}")
    counts = np.zeros((num_levels + 2, 1 << b), dtype=np.int64)
    for img in images:
        pyr = build_pyramid(img, num_levels)
        parts = [img] + pyr.fine + [pyr.coarsest]
        for k, part in enumerate(parts):
            counts[k] += np.bincount(part.pixels.ravel(), minlength=1 << b)
    return [(label, entropy_of_counts(c)) for label, c in zip(_level_labels(num_levels), counts)]


@dataclass
class MICurve:
    distances: np.ndarray
    mi_bits: np.ndarray
    mi_horizontal: np.ndarray
    mi_vertical: np.ndarray
    bias_bits: np.ndarray
    bins: int
    requantized: bool = False


def _quantize(pixels, bit_depth, bins):
    """Map samples onto ``bins`` equal-width levels (a no-op when ``bins == 2**b``)."""
    return (pixels.astype(np.int64) * bins) >> bit_depth


def mutual_information_pairs(x: np.ndarray, y: np.ndarray, bins: int) -> tuple[float, float]:
    """Plug-in MI (bits) between paired samples plus its first-order bias estimate."""
    x = np.asarray(x, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    n = x.size
    if n == 0:
        raise DomainError("no sample pairs")
    joint = np.bincount(x * bins + y, minlength=bins * bins).reshape(bins, bins)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    pxy = joint[nz] / n
    outer = (px[:, None] * py[None, :])[nz] / (n * n)
    mi = float(np.sum(pxy * np.log2(pxy / outer)))
    occupied = nz.sum() - (px > 0).sum() - (py > 0).sum() + 1
    bias = max(occupied, 0) / (2.0 * n * np.log(2))
    return max(mi, 0.0), bias


def _offset_pairs(arr, dr, dc):
    h, w = arr.shape[:2]
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    return arr[r0:r1, c0:c1], arr[r0 + dr:r1 + dr, c0 + dc:c1 + dc]


def offset_mutual_information(images, offset, bins=None) -> tuple[float, float]:
    """MI between every pixel and the pixel ``offset = (dr, dc)`` away, pooled over the collection."""
    images, b = _common_depth(images)
    bins, depth = _bins_for(b, bins)
    dr, dc = offset
    xs, ys = [], []
    for img in images:
        q = _quantize(img.pixels >> (b - depth), depth, bins)
        a, c = _offset_pairs(q, dr, dc)
        xs.append(a.ravel())
        ys.append(c.ravel())
    return mutual_information_pairs(np.concatenate(xs), np.concatenate(ys), bins)


def _bins_for(bit_depth, bins):
    # joint histograms of deep images are computed on 8-bit requantised values
    depth = min(bit_depth, 8)
    if bins is None:
        bins = 1 << depth
    if not 2 <= bins <= 1 << depth:
        raise DomainError(f"bins must be in [2, {1 << depth}], got {bins}")
    return bins, depth


def mutual_information_curve(images, max_distance: int, bins: int | None = None, clamp_bias: bool = True) -> MICurve:
    """MI between pixels ``d`` apart for ``d = 1..max_distance``.

    Horizontal and vertical lags are estimated separately and averaged.
    Estimates that do not exceed the plug-in bias floor are reported as 0.
    """
    images, b = _common_depth(images)
    if max_distance < 1:
        raise DomainError(f"max_distance must be >= 1, got {max_distance}")
    smallest = min(min(img.height, img.width) for img in images)
    if max_distance >= smallest:
        raise DomainError(f"max_distance {max_distance} must be below the smallest image extent {smallest}")
    bins, depth = _bins_for(b, bins)
    quantized = [
        _quantize(img.pixels >> (b - depth), depth, bins) for img in images
    ]
    d = np.arange(1, max_distance + 1)
    horiz, vert, bias = [], [], []
    for lag in d:
        row = []
        for dr, dc in ((0, lag), (lag, 0)):
            xs, ys = zip(*(_offset_pairs(q, dr, dc) for q in quantized))
            mi, floor = mutual_information_pairs(
                np.concatenate([x.ravel() for x in xs]), np.concatenate([y.ravel() for y in ys]), bins
            )
            if clamp_bias and mi <= floor:
                mi = 0.0
            row.append((mi, floor))
        horiz.append(row[0][0])
        vert.append(row[1][0])
        bias.append(0.5 * (row[0][1] + row[1][1]))
    horiz = np.array(horiz)
    vert = np.array(vert)
    return MICurve(d, 0.5 * (horiz + vert), horiz, vert, np.array(bias), bins, requantized=b > 8)


def pyramid_components(images, num_levels: int) -> dict[str, list[Image]]:
    """Group the pyramid parts of every image by label (``original``, ``F1``.., ``IL``)."""
    labels = _level_labels(num_levels)
    out = {label: [] for label in labels}
    for img in images:
        pyr = build_pyramid(img, num_levels)
        for label, part in zip(labels, [img] + pyr.fine + [pyr.coarsest]):
            out[label].append(part)
    return out
