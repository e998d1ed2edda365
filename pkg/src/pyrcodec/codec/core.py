"""Lossless coding of an image through its paired pyramid.

Every fine component ``F_i`` is coded conditioned on the coarse image ``I_i``
it was split from, in the group order of a squeeze scan plan; the coarsest
image is coded in raster order.  Each component becomes its own range-coded
substream, so components can be encoded concurrently, while decoding walks
from the coarsest level back to full resolution.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import CausalityError, DomainError, IntegrityError
from ..image import Image
from ..logistic import FitConfig, LogisticMixtureParams, binned_pmf, default_shift, fit
from ..pyramid import Axis, auto_levels, build_pyramid, level_shapes, mod_add_array
from ..scan import make_scan_plan, max_squeeze, raster_plan
from ..stats import Histogram
from . import _kernels as K
from .context import NEIGHBOR_OFFSETS, ContextConfig, ContextTables, raw_tables, residual_tables
from .rangecoder import MAX_TOTAL, cumulative, quantize_pmf
from .stream import FALLBACK_BUCKET, CodedStream, ComponentModel, image_crc

log = logging.getLogger(__name__)

MODES = ("adaptive", "static")
THREADS_ENV = "PYRCODEC_THREADS"


@dataclass(frozen=True)
class CodecConfig:
    """Codec settings; everything the decoder needs is written to the header."""

    levels: int | None = None  # None: coarsest image of 4 x 4
    n_squeeze: int = 2
    mode: str = "adaptive"
    mixtures: int = 10
    shift: bool = True
    modulo: bool = True
    increment: int = 32
    limit: int = MAX_TOTAL
    # mass of the component-wide table blended into every bucket (0 disables blending)
    prior: int = 4096
    context: ContextConfig = field(default_factory=ContextConfig)
    fit: FitConfig = field(default_factory=lambda: FitConfig(restarts=1, max_iter=200))
    # static mode: buckets with fewer samples always use the component default
    min_bucket_samples: int = 1024
    debug: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 <= self.n_squeeze <= 255:
            raise DomainError(f"n_squeeze must be in [0, 255], got {self.n_squeeze}")
        if self.mixtures < 1:
            raise DomainError(f"mixtures must be >= 1, got {self.mixtures}")
        if not 1 <= self.increment < 1 << 16:
            raise DomainError(f"increment must be in [1, 65535], got {self.increment}")
        if not 256 + self.increment + self.prior <= self.limit <= MAX_TOTAL:
            raise DomainError(f"limit must be in [256 + increment + prior, {MAX_TOTAL}], got {self.limit}")
        if not 0 <= self.prior <= self.limit // 2:
            raise DomainError(f"prior must be in [0, limit / 2], got {self.prior}")



def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit request, else ``PYRCODEC_THREADS``, else the CPU count."""
    if requested is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            requested = os.cpu_count() or 1
    return max(1, int(requested))


@dataclass
class _Component:
    label: str
    vals: np.ndarray  # int32 (h, w, c), the symbols to code
    side: np.ndarray  # int32 coarse image, or a dummy for raster components
    plan: object
    tables: ContextTables


def _dummy_side():
    return np.zeros((1, 1, 1), dtype=np.int32)


def _plan_args(plan):
    return plan.group_map, plan.order, NEIGHBOR_OFFSETS


def _components(img: Image, num_levels: int, config: CodecConfig) -> list[_Component]:
    b = img.bit_depth
    pyr = build_pyramid(img, num_levels, keep_coarse=True)
    comps = []
    parent = img
    for lvl, coarse in zip(pyr.levels, pyr.coarse):
        h, w, _ = coarse.shape
        plan = make_scan_plan(h, w, max_squeeze(h, w, config.n_squeeze))
        if config.modulo:
            vals = lvl.fine.pixels.astype(np.int32)
            tables = residual_tables(b, config.context)
        else:
            removed = parent.pixels[1::2] if lvl.axis is Axis.ROWS else parent.pixels[:, 1::2]
            vals = removed.astype(np.int32)
            tables = raw_tables(b, config.context)
        comps.append(_Component(f"F{lvl.index}", np.ascontiguousarray(vals),
                                coarse.pixels.astype(np.int32), plan, tables))
        parent = coarse
    h, w, _ = pyr.coarsest.shape
    comps.append(_Component(f"I{num_levels}", pyr.coarsest.pixels.astype(np.int32), _dummy_side(),
                            raster_plan(h, w), raw_tables(b, config.context, raster=True)))
    return comps


def _static_table(mixtures: dict[int, LogisticMixtureParams], n_buckets: int, bits: int) -> np.ndarray:
    """Cumulative tables per bucket from the fitted mixtures (fallback for unlisted buckets)."""
    lo_bits = max(bits - 8, 0)
    hi_alpha = 1 << (bits - lo_bits)
    default = cumulative(quantize_pmf(binned_pmf(mixtures[FALLBACK_BUCKET], lo_bits)))
    table = np.empty((n_buckets, hi_alpha + 1), dtype=np.int64)
    table[:] = default
    for bucket, params in mixtures.items():
        if bucket != FALLBACK_BUCKET:
            table[bucket] = cumulative(quantize_pmf(binned_pmf(params, lo_bits)))
    return table


def _empty_static(n_buckets, bits):
    lo_bits = max(bits - 8, 0)
    return np.zeros((1, (1 << (bits - lo_bits)) + 1), dtype=np.int64)


def _static_cost_bits(params, hi_counts, lo_bits) -> float:
    freq = quantize_pmf(binned_pmf(params, lo_bits))
    nz = hi_counts > 0
    return float(-(hi_counts[nz] * np.log2(freq[nz] / MAX_TOTAL)).sum())


def _fit_static(comp: _Component, bits: int, shift: int, n_buckets: int,
                config: CodecConfig) -> dict[int, LogisticMixtureParams]:
    """Default mixture plus per-bucket mixtures whose saving beats their header cost."""
    buckets, values = K.component_symbols(comp.vals, comp.side, *_plan_args(comp.plan), *comp.tables.kernel_args(),
                                          bits, shift)
    lo_bits = max(bits - 8, 0)
    m = config.mixtures
    default = fit(Histogram.of(values, bits), m, config.fit).params
    mixtures = {FALLBACK_BUCKET: default}
    record_bits = 8 * (2 + len(default.to_bytes()))
    counts = np.bincount(buckets, minlength=n_buckets)
    for bucket in np.flatnonzero(counts >= config.min_bucket_samples):
        sel = values[buckets == bucket]
        hi_counts = np.bincount(sel >> lo_bits, minlength=1 << (bits - lo_bits))
        params = fit(Histogram.of(sel, bits), m, config.fit).params
        gain = _static_cost_bits(default, hi_counts, lo_bits) - _static_cost_bits(params, hi_counts, lo_bits)
        if gain > record_bits:
            mixtures[int(bucket)] = params
    return mixtures


def _code(comp: _Component, bits: int, shift: int, model: int, n_buckets: int, static_cum, config: CodecConfig):
    return K.code_component(
        comp.vals, comp.side, *_plan_args(comp.plan), *comp.tables.kernel_args(),
        bits, shift, model, n_buckets, static_cum, config.increment, config.limit, config.prior, n_buckets, 1,
    )


def _decode(data, shape, comp_side, plan, tables, bits, shift, model, n_buckets, static_cum, inc, limit, prior, parent_div,
            n_parents):
    h, w, c = shape
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    return K.decode_component(
        buf, h, w, c, comp_side, *_plan_args(plan), *tables.kernel_args(),
        bits, shift, model, n_buckets, static_cum, inc, limit, prior, parent_div, n_parents,
    )


def _encode_component(comp: _Component, bits: int, shift: int, config: CodecConfig):
    """Code one component with the configured model and with the uniform model; keep the shorter."""
    n_buckets = config.context.num_buckets
    empty = _empty_static(n_buckets, bits)
    uni_bytes, uni_ideal = _code(comp, bits, shift, K.MODEL_UNIFORM, n_buckets, empty, config)
    if config.mode == "static":
        mixtures = _fit_static(comp, bits, shift, n_buckets, config)
        static_cum = _static_table(mixtures, n_buckets, bits)
        data, ideal = _code(comp, bits, shift, K.MODEL_STATIC, n_buckets, static_cum, config)
        header_cost = sum(2 + len(p.to_bytes()) for p in mixtures.values()) + 2
        model = ComponentModel(K.MODEL_STATIC, mixtures)
        if len(uni_bytes) <= len(data) + header_cost:
            model, data, ideal, static_cum = ComponentModel(K.MODEL_UNIFORM), uni_bytes, uni_ideal, empty
    else:
        static_cum = empty
        data, ideal = _code(comp, bits, shift, K.MODEL_ADAPTIVE, n_buckets, empty, config)
        model = ComponentModel(K.MODEL_ADAPTIVE)
        if len(uni_bytes) < len(data):
            model, data, ideal = ComponentModel(K.MODEL_UNIFORM), uni_bytes, uni_ideal
    if config.debug:
        # shadow decode: the decoder must reproduce the samples from causal data only
        back = _decode(data, comp.vals.shape, comp.side, comp.plan, comp.tables, bits, shift, model.model_id,
                       n_buckets, static_cum, config.increment, config.limit, config.prior, n_buckets, 1)
        if not np.array_equal(back, comp.vals):
            raise CausalityError(f"shadow decode of component {comp.label} diverged from the encoder")
    return model, bytes(data), float(ideal)


def encode(img: Image, config: CodecConfig | None = None) -> CodedStream:
    """Code ``img`` losslessly; the returned stream serialises with ``to_bytes``."""
    config = config or CodecConfig()
    num_levels = auto_levels(img.shape) if config.levels is None else config.levels
    if num_levels > 255:
        raise DomainError(f"at most 255 levels, got {num_levels}")
    level_shapes(img.shape, num_levels)
    b = img.bit_depth
    shift = default_shift(b) if config.shift else 0
    comps = _components(img, num_levels, config)
    threads = min(resolve_threads(config.threads), len(comps))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _encode_component(c, b, shift, config), comps))
    else:
        results = [_encode_component(c, b, shift, config) for c in comps]
    stream = CodedStream(
        height=img.height, width=img.width, channels=img.channels, bit_depth=b,
        n_squeeze=[c.plan.n_squeeze for c in comps[:-1]], shift=shift,
        static=config.mode == "static", no_modulo=not config.modulo,
        coarse_bins=config.context.coarse_bins, neighbor_bins=config.context.neighbor_bins,
        increment=config.increment, limit=config.limit, prior=config.prior,
        residual_feature=config.context.residual_feature, predict_residual=config.context.predict_residual,
        predict_raw=config.context.predict_raw,
        components=[r[0] for r in results], payloads=[r[1] for r in results],
        crc=image_crc(img.pixels, b), ideal_bits=[r[2] for r in results],
    )
    log.debug("encoded %r into %d bytes (%d levels)", img, sum(map(len, stream.payloads)), num_levels)
    if config.debug and decode(stream) != img:
        raise IntegrityError("debug round trip failed")
    return stream


def _interleave(coarse: np.ndarray, removed: np.ndarray, axis: Axis) -> np.ndarray:
    h, w, c = coarse.shape
    out = np.empty((2 * h, w, c) if axis is Axis.ROWS else (h, 2 * w, c), dtype=np.uint16)
    if axis is Axis.ROWS:
        out[0::2], out[1::2] = coarse, removed
    else:
        out[:, 0::2], out[:, 1::2] = coarse, removed
    return out


def decode(stream: CodedStream | bytes) -> Image:
    """Invert :func:`encode`; raises ``IntegrityError`` if the checksum does not match."""
    if not isinstance(stream, CodedStream):
        stream = CodedStream.from_bytes(stream)
    b = stream.bit_depth
    shape = (stream.height, stream.width, stream.channels)
    num_levels = stream.num_levels
    try:
        shapes = level_shapes(shape, num_levels)
    except ValueError as exc:
        raise IntegrityError(f"header shape is inconsistent: {exc}") from None
    ctx = ContextConfig(stream.coarse_bins, stream.neighbor_bins, stream.residual_feature,
                        stream.predict_residual, stream.predict_raw)
    n_buckets = ctx.num_buckets

    def run(k, comp_shape, side, plan, tables):
        model = stream.components[k]
        static_cum = (_static_table(model.mixtures, n_buckets, b) if model.model_id == K.MODEL_STATIC
                      else _empty_static(n_buckets, b))
        if model.model_id == K.MODEL_STATIC and FALLBACK_BUCKET not in model.mixtures:
            raise IntegrityError(f"static component {k} lacks a default mixture")
        return _decode(stream.payloads[k], comp_shape, side, plan, tables, b, stream.shift, model.model_id,
                       n_buckets, static_cum, stream.increment, stream.limit, stream.prior, n_buckets, 1)

    top = shapes[-1] if num_levels else shape
    current = run(num_levels, top, _dummy_side(), raster_plan(top[0], top[1]), raw_tables(b, ctx, raster=True))
    current = current.astype(np.uint16)
    for i in range(num_levels, 0, -1):
        h, w, _ = shapes[i - 1]
        n = stream.n_squeeze[i - 1]
        if n != max_squeeze(h, w, n):
            raise IntegrityError(f"level {i}: squeeze count {n} does not divide {h}x{w}")
        plan = make_scan_plan(h, w, n)
        axis = Axis.for_level(i)
        if stream.no_modulo:
            vals = run(i - 1, shapes[i - 1], current.astype(np.int32), plan, raw_tables(b, ctx))
            current = _interleave(current, vals.astype(np.uint16), axis)
        else:
            vals = run(i - 1, shapes[i - 1], current.astype(np.int32), plan, residual_tables(b, ctx))
            current = _interleave(current, mod_add_array(vals.astype(np.uint16), current, b), axis)
    if image_crc(current, b) != stream.crc:
        raise IntegrityError("CRC32 mismatch: decoded image differs from the original")
    return Image(current, b)


@dataclass(frozen=True)
class LevelRate:
    label: str
    samples: int
    bits: int
    bits_per_dim: float
    pixel_share: float


@dataclass(frozen=True)
class RateReport:
    levels: list[LevelRate]
    payload_bits: int
    header_bits: int
    total_samples: int

    @property
    def bits_per_dim(self) -> float:
        """Payload bits over all samples (coded substreams only)."""
        return self.payload_bits / self.total_samples

    @property
    def file_bits_per_dim(self) -> float:
        return (self.payload_bits + self.header_bits) / self.total_samples

    def rows(self):
        return [(lv.label, lv.bits_per_dim, lv.pixel_share) for lv in self.levels]


def report_for(stream: CodedStream) -> RateReport:
    shape = (stream.height, stream.width, stream.channels)
    shapes = level_shapes(shape, stream.num_levels)
    sizes = [int(np.prod(s)) for s in shapes] + [int(np.prod(shapes[-1] if shapes else shape))]
    total = int(np.prod(shape))
    labels = [f"F{i}" for i in range(1, stream.num_levels + 1)] + [f"I{stream.num_levels}"]
    levels = []
    for label, n, payload in zip(labels, sizes, stream.payloads):
        bits = 8 * len(payload)
        levels.append(LevelRate(label, n, bits, bits / n, n / total))
    payload_bits = sum(lv.bits for lv in levels)
    header_bits = 8 * (len(stream.header_bytes()) + 4)
    return RateReport(levels, payload_bits, header_bits, total)


def rate_report(img: Image, config: CodecConfig | None = None) -> RateReport:
    """Per-level bits/dim and pixel share of ``img`` under ``config``."""
    return report_for(encode(img, config))


def encode_bytes(img: Image, config: CodecConfig | None = None) -> bytes:
    return encode(img, config).to_bytes()

