"""Removal of isolated pixel outliers (salt-and-pepper artifacts).

Pixels are mapped to HSV, scored with an isolation forest, and the highest
scoring fraction is replaced by the median of its window.  Every other pixel
is left untouched.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import DomainError, ShapeError
from .image import Image

log = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329


# -- colour space

def rgb_to_hsv(img: Image) -> np.ndarray:
    """Hexcone HSV of a 3-channel image: hue in degrees [0, 360), S and V in [0, 1]."""
    if img.channels != 3:
        raise DomainError(f"HSV conversion needs 3 channels, got {img.channels}")
    rgb = img.pixels.astype(np.float64) / img.maxval
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.divide(c, v, out=np.zeros_like(v), where=v > 0)
    safe = np.where(c > 0, c, 1.0)
    # the first maximal channel decides the sector, red before green before blue
    h = np.where(
        v == r, ((g - b) / safe) % 6.0,
        np.where(v == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    h = np.where(c > 0, 60.0 * h, 0.0) % 360.0
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray, bit_depth: int = 8) -> Image:
    """Inverse of :func:`rgb_to_hsv`, rounded to the nearest representable sample."""
    hsv = np.asarray(hsv, dtype=np.float64)
    if hsv.shape[-1] != 3:
        raise ShapeError(f"expected (..., 3) HSV triples, got shape {hsv.shape}")
    h, s, v = hsv[..., 0] % 360.0, hsv[..., 1], hsv[..., 2]
    c = v * s
    hp = h / 60.0
    x = c * (1 - np.abs(hp % 2 - 1))
    sector = np.floor(hp).astype(int) % 6
    zero = np.zeros_like(c)
    table = [(c, x, zero), (x, c, zero), (zero, c, x), (zero, x, c), (x, zero, c), (c, zero, x)]
    rgb = np.zeros(hsv.shape)
    for k, (r1, g1, b1) in enumerate(table):
        sel = sector == k
        rgb[sel] = np.stack([r1[sel], g1[sel], b1[sel]], axis=-1)
    rgb += (v - c)[..., None]
    maxval = (1 << bit_depth) - 1
    return Image(np.clip(np.rint(rgb * maxval), 0, maxval).astype(np.uint16), bit_depth)


# -- median filter

def median_filter(img: Image, m: int = 7) -> Image:
    """Per-channel median over an ``m x m`` window, replicating edge pixels."""
    if m < 1 or m % 2 == 0:
        raise DomainError(f"window size must be a positive odd integer, got {m}")
    out = ndimage.median_filter(img.pixels, size=(m, m, 1), mode="nearest")
    return Image(out, img.bit_depth)


# -- isolation forest

def average_path_length(n) -> np.ndarray:
    """Expected depth of an unsuccessful search in a random BST of ``n`` keys."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    big = n > 2
    out[n == 2] = 1.0
    nb = n[big]
    out[big] = 2.0 * (np.log(nb - 1.0) + EULER_GAMMA) - 2.0 * (nb - 1.0) / nb
    return out


@dataclass(frozen=True)
class IsolationForestConfig:
    trees: int = 100
    subsample: int = 256
    contamination: float = 0.002
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise DomainError(f"trees must be >= 1, got {self.trees}")
        if self.subsample < 2:
            raise DomainError(f"subsample must be >= 2, got {self.subsample}")
        if not 0.0 < self.contamination < 0.5:
            raise DomainError(f"contamination must lie in (0, 0.5), got {self.contamination}")


@dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    # depth of the node plus the expected remaining depth for leaves
    leaf_value: np.ndarray


def _build_tree(x: np.ndarray, rng: np.random.Generator, height_limit: int) -> _Tree:
    feature, threshold, left, right, leaf_value = [], [], [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (leaf_value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    stack = [(new_node(), np.arange(x.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        pts = x[idx]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if depth >= height_limit or idx.size <= 1 or splittable.size == 0:
            leaf_value[node] = depth + float(average_path_length(idx.size))
            continue
        q = int(rng.choice(splittable))
        p = rng.uniform(lo[q], hi[q])
        go_left = pts[:, q] < p
        feature[node], threshold[node] = q, p
        left[node], right[node] = new_node(), new_node()
        stack.append((left[node], idx[go_left], depth + 1))
        stack.append((right[node], idx[~go_left], depth + 1))
    return _Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(leaf_value))


def _path_lengths(tree: _Tree, x: np.ndarray) -> np.ndarray:
    node = np.zeros(x.shape[0], dtype=np.int64)
    active = tree.feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        n = node[idx]
        go_left = x[idx, tree.feature[n]] < tree.threshold[n]
        node[idx] = np.where(go_left, tree.left[n], tree.right[n])
        active = tree.feature[node] >= 0
    return tree.leaf_value[node]


def isolation_scores(points, trees: int = 100, subsample: int = 256, seed: int = 0) -> np.ndarray:
    """Anomaly score ``2^(-E[h(x)] / c(psi))`` of every row of ``points``; higher is more isolated."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise DomainError("isolation forest needs at least one point")
    rng = np.random.default_rng(seed)
    psi = min(subsample, x.shape[0])
    height_limit = max(int(math.ceil(math.log2(max(psi, 2)))), 1)
    depth = np.zeros(x.shape[0])
    for _ in range(trees):
        sample = rng.choice(x.shape[0], size=psi, replace=False)
        depth += _path_lengths(_build_tree(x[sample], rng, height_limit), x)
    norm = float(average_path_length(psi)) or 1.0
    return np.power(2.0, -(depth / trees) / norm)


def top_fraction_mask(scores: np.ndarray, contamination: float) -> np.ndarray:
    """Flag the ``ceil(contamination * n)`` highest scores; ties go to the lower index."""
    scores = np.asarray(scores).ravel()
    k = min(int(math.ceil(contamination * scores.size)), scores.size)
    mask = np.zeros(scores.size, dtype=bool)
    mask[np.argsort(-scores, kind="stable")[:k]] = True
    return mask


def isolation_forest(points, trees: int = 100, subsample: int = 256, contamination: float = 0.002,
                     seed: int = 0) -> np.ndarray:
    """Boolean outlier flag per point: the top ``contamination`` fraction by isolation score."""
    if not 0.0 < contamination < 0.5:
        raise DomainError(f"contamination must lie in (0, 0.5), got {contamination}")
    return top_fraction_mask(isolation_scores(points, trees, subsample, seed), contamination)


def _hsv_features(img: Image, neighborhood: int) -> np.ndarray:
    """HSV of each pixel (hue scaled to [0, 1]); for ``neighborhood > 1`` the whole window is stacked."""
    hsv = rgb_to_hsv(img)
    hsv[..., 0] /= 360.0
    if neighborhood == 1:
        return hsv.reshape(-1, 3)
    r = neighborhood // 2
    padded = np.pad(hsv, ((r, r), (r, r), (0, 0)), mode="edge")
    h, w = img.height, img.width
    cols = [padded[dr:dr + h, dc:dc + w] for dr in range(neighborhood) for dc in range(neighborhood)]
    return np.concatenate(cols, axis=-1).reshape(h * w, -1)


def outlier_mask(img: Image, config: IsolationForestConfig | None = None, neighborhood: int = 1) -> np.ndarray:
    """H x W boolean mask of pixels the forest isolates fastest in HSV space."""
    config = config or IsolationForestConfig()
    if neighborhood < 1 or neighborhood % 2 == 0:
        raise DomainError(f"neighborhood must be a positive odd integer, got {neighborhood}")
    feats = _hsv_features(img, neighborhood)
    mask = isolation_forest(feats, config.trees, config.subsample, config.contamination, config.seed)
    return mask.reshape(img.height, img.width)


@dataclass(frozen=True)
class DespeckleResult:
    image: Image
    mask: np.ndarray
    changed: int
    metadata: dict


def despeckle_with_mask(img: Image, m: int = 7, config: IsolationForestConfig | None = None,
                        neighborhood: int = 1) -> DespeckleResult:
    config = config or IsolationForestConfig()
    mask = outlier_mask(img, config, neighborhood)
    med = median_filter(img, m)
    out = img.pixels.copy()
    out[mask] = med.pixels[mask]
    changed = int(np.any(out != img.pixels, axis=-1).sum())
    meta = {"window": m, "neighborhood": neighborhood, "flagged": int(mask.sum()), "changed": changed, **asdict(config)}
    log.info("despeckle flagged %d pixels, changed %d", meta["flagged"], changed)
    return DespeckleResult(Image(out, img.bit_depth), mask, changed, meta)


def despeckle(img: Image, m: int = 7, config: IsolationForestConfig | None = None, neighborhood: int = 1) -> Image:
    """Replace the flagged outlier pixels with their ``m x m`` median; all others stay bit-identical."""
    return despeckle_with_mask(img, m, config, neighborhood).image


def psnr(reference: Image, test: Image) -> float:
    """Peak signal-to-noise ratio in dB (``inf`` for identical images)."""
    if reference.shape != test.shape:
        raise ShapeError(f"shape mismatch {reference.shape} vs {test.shape}")
    mse = float(np.mean((reference.pixels.astype(np.float64) - test.pixels.astype(np.float64)) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(reference.maxval ** 2 / mse)
