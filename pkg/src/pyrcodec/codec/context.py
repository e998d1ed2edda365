"""Context buckets for the per-level probability models.

A bucket combines two quantised features of data the decoder already has:

* the co-located coarse sample (for the coarsest image, coded in raster
  order, the pixel above it);
* the rounded mean of up to four neighbours that belong to earlier coding
  groups, picked from a fixed candidate list ordered by distance.  When no
  such neighbour exists the bin is that of a zero residual (fine
  components) or of the coarse feature itself (raw components), so the
  bucket then depends on the coarse feature alone.

Fine components are compared in *signed residual* form, so the neighbour
feature of a modulo difference is symmetric around zero.

The same neighbour mean doubles as a prediction: the coder codes
``(v - prediction + shift) mod 2^b``, which centres every bucket's
distribution on ``shift``.  Without earlier neighbours the prediction is the
component's neutral value (a zero residual, or mid-range for raw samples).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CausalityError, DomainError

# candidate neighbours, nearest first
NEIGHBOR_OFFSETS = np.array(
    [(0, -1), (-1, 0), (0, 1), (1, 0),
     (-1, -1), (-1, 1), (1, -1), (1, 1),
     (0, -2), (-2, 0), (0, 2), (2, 0)],
    dtype=np.int32,
)
MAX_NEIGHBORS = 4

# signed residual thresholds for 8-bit data; scaled by 2^(b-8) for deeper images
_RESIDUAL_EDGES = np.array([-21, -13, -8, -5, -3, -2, -1, 0, 1, 2, 3, 5, 8, 13, 21])
# residual magnitude thresholds for 8-bit data
_MAGNITUDE_EDGES = np.array([1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 19, 24, 30, 40, 56])
FEATURES = ("signed", "magnitude")


@dataclass(frozen=True)
class ContextConfig:
    coarse_bins: int = 16
    neighbor_bins: int = 16
    residual_feature: str = "magnitude"
    predict_residual: bool = False
    predict_raw: bool = True

    def __post_init__(self):
        if self.residual_feature not in FEATURES:
            raise DomainError(f"residual_feature must be one of {FEATURES}, got {self.residual_feature!r}")
        if not 1 <= self.coarse_bins <= 256:
            raise DomainError(f"coarse_bins must be in [1, 256], got {self.coarse_bins}")
        if not 1 <= self.neighbor_bins <= 256:
            raise DomainError(f"neighbor_bins must be in [1, 256], got {self.neighbor_bins}")

    @property
    def num_buckets(self) -> int:
        return self.coarse_bins * self.neighbor_bins


def uniform_lut(bit_depth: int, bins: int) -> np.ndarray:
    return ((np.arange(1 << bit_depth, dtype=np.int64) * bins) >> bit_depth).astype(np.int32)


def residual_edges(bit_depth: int, bins: int) -> np.ndarray:
    if bins == 16:
        edges = _RESIDUAL_EDGES
    else:
        # evenly spread quantiles of a geometric-like spacing
        half = max((bins - 1) // 2, 1)
        pos = np.unique(np.round(np.geomspace(1, 32, half)).astype(int))
        edges = np.concatenate([-pos[::-1], [0], pos])[: bins - 1]
    if bit_depth > 8:
        edges = edges * (1 << (bit_depth - 8))
    return edges


def magnitude_edges(bit_depth: int, bins: int) -> np.ndarray:
    if bins == 16:
        edges = _MAGNITUDE_EDGES
    else:
        edges = np.unique(np.round(np.geomspace(1, 64, max(bins - 1, 1))).astype(int))
    if bit_depth > 8:
        edges = edges * (1 << (bit_depth - 8))
    return edges


def signed_residual(values, bit_depth: int, shift: int = 0):
    """Map coded fine samples back to residuals in ``[-2^(b-1), 2^(b-1))``."""
    k = 1 << bit_depth
    return ((np.asarray(values, dtype=np.int64) - shift + k // 2) & (k - 1)) - k // 2


@dataclass(frozen=True)
class ContextTables:
    """Lookup tables consumed by the compiled coder for one component."""

    ctxval: np.ndarray
    ctx_offset: int
    cq: np.ndarray
    nq: np.ndarray
    n_nbins: int
    # neighbour bin used when no earlier neighbour exists; -1 = bin of the coarse feature
    none_bin: int
    raster: bool
    mid: int
    # prediction (in coded-value units) when no earlier neighbour exists
    none_pred: int
    use_pred: bool = True

    @property
    def num_buckets(self) -> int:
        return int(self.cq.max() + 1) * self.n_nbins

    def kernel_args(self) -> tuple:
        return (self.ctxval, self.ctx_offset, self.cq, self.nq, self.n_nbins, self.none_bin, self.raster, self.mid,
                self.none_pred, self.use_pred)


def residual_tables(bit_depth: int, config: ContextConfig) -> ContextTables:
    """Tables for a fine component (modulo differences)."""
    k = 1 << bit_depth
    signed = signed_residual(np.arange(k), bit_depth, 0).astype(np.int32)
    cq = uniform_lut(bit_depth, config.coarse_bins)
    if config.residual_feature == "magnitude":
        edges = magnitude_edges(bit_depth, config.neighbor_bins)
        nq = np.searchsorted(edges, np.arange(k), side="right").astype(np.int32)
        return ContextTables(np.abs(signed).astype(np.int32), 0, cq, nq, config.neighbor_bins, int(nq[0]),
                             False, k // 2, 0, False)
    edges = residual_edges(bit_depth, config.neighbor_bins)
    nq = np.searchsorted(edges, np.arange(k) - k // 2, side="right").astype(np.int32)
    return ContextTables(signed, k // 2, cq, nq, config.neighbor_bins, int(nq[k // 2]), False, k // 2, 0,
                         config.predict_residual)


def raw_tables(bit_depth: int, config: ContextConfig, raster: bool = False) -> ContextTables:
    """Tables for components holding plain pixel values (coarsest image, unmodulated removals)."""
    k = 1 << bit_depth
    return ContextTables(np.arange(k, dtype=np.int32), 0, uniform_lut(bit_depth, config.coarse_bins),
                         uniform_lut(bit_depth, config.neighbor_bins), config.neighbor_bins, -1, raster, k // 2, k // 2,
                         config.predict_raw)


def context_bucket(tables: ContextTables, coarse_value: int, prev_group_values) -> int:
    """Bucket id from a coarse sample and the values of earlier-group neighbours.

    ``prev_group_values`` holds at most four already-decoded neighbour
    samples (raw coded values).  For raster tables ``coarse_value`` is the
    causal feature (pixel above, else left, else ``mid``).
    """
    vals = list(prev_group_values)
    if len(vals) > MAX_NEIGHBORS:
        raise DomainError(f"at most {MAX_NEIGHBORS} neighbours, got {len(vals)}")
    if vals:
        total = int(sum(int(tables.ctxval[v]) for v in vals))
        n = len(vals)
        mean = (2 * total + n) // (2 * n)
        nb = int(tables.nq[mean + tables.ctx_offset])
    elif tables.none_bin >= 0:
        nb = tables.none_bin
    else:
        nb = int(tables.nq[coarse_value + tables.ctx_offset])
    return int(tables.cq[coarse_value]) * tables.n_nbins + nb


def predict(tables: ContextTables, prev_group_values) -> int:
    """Prediction in coded-value units from the same neighbours as :func:`context_bucket`."""
    vals = list(prev_group_values)
    if not vals:
        return tables.none_pred
    total = int(sum(int(tables.ctxval[v]) for v in vals))
    n = len(vals)
    return ((2 * total + n) // (2 * n)) & (tables.ctxval.size - 1)


def gather_neighbors(values, group_map, r, c, ch, decoded=None):
    """Earlier-group neighbour values of ``(r, c, ch)``, nearest first.

    When ``decoded`` (a boolean mask of already-decoded pixels) is given, any
    selected neighbour that is not yet decoded raises :class:`CausalityError`.
    """
    h, w = group_map.shape
    g = group_map[r, c]
    out = []
    for dr, dc in NEIGHBOR_OFFSETS:
        rr, cc = r + dr, c + dc
        if not (0 <= rr < h and 0 <= cc < w) or group_map[rr, cc] >= g:
            continue
        if decoded is not None and not decoded[rr, cc]:
            raise CausalityError(f"neighbour ({rr}, {cc}) of ({r}, {c}) is not decoded yet")
        out.append(int(values[rr, cc, ch]))
        if len(out) == MAX_NEIGHBORS:
            break
    return out


def coarse_feature(values, side, r, c, ch, raster: bool, mid: int, decoded=None) -> int:
    if not raster:
        return int(side[r, c, ch])
    for rr, cc in ((r - 1, c), (r, c - 1)):
        if rr >= 0 and cc >= 0:
            if decoded is not None and not decoded[rr, cc]:
                raise CausalityError(f"pixel ({rr}, {cc}) is not decoded yet")
            return int(values[rr, cc, ch])
    return mid
