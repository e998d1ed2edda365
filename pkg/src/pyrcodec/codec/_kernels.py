"""Compiled inner loops: range coding of whole components with context models.

Byte output is identical to ``rangecoder.RangeEncoder``; see that module for
the stream conventions.  Every function here is deterministic integer code
apart from the ``ideal_bits`` diagnostic.
"""

import numpy as np
from numba import njit

MODEL_ADAPTIVE = 0
MODEL_UNIFORM = 1
MODEL_STATIC = 2

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
MAX_NEIGHBORS = 4


# -- coder state: st = [low, range, cache, cache_size, started, pos]  (int64)

@njit(cache=True, nogil=True)
def _enc_init(st):
    st[0] = 0
    st[1] = _MASK32
    st[2] = 0
    st[3] = 1
    st[4] = 0
    st[5] = 0


@njit(cache=True, nogil=True)
def _shift_low(st, buf):
    low = st[0]
    if low < 0xFF000000 or low > _MASK32:
        carry = low >> 32
        temp = st[2]
        while True:
            if st[4]:
                buf[st[5]] = (temp + carry) & 0xFF
                st[5] += 1
            st[4] = 1
            temp = 0xFF
            st[3] -= 1
            if st[3] == 0:
                break
        st[2] = (low >> 24) & 0xFF
    st[3] += 1
    st[0] = (low & 0x00FFFFFF) << 8


@njit(cache=True, nogil=True)
def _enc_put(st, buf, start, freq, total):
    r = st[1] // total
    st[0] += r * start
    st[1] = r * freq
    while st[1] < _TOP:
        st[1] <<= 8
        _shift_low(st, buf)


@njit(cache=True, nogil=True)
def _enc_finish(st, buf):
    st[0] = (st[0] + _TOP - 1) & ~(_TOP - 1)
    _shift_low(st, buf)
    _shift_low(st, buf)
    n = st[5]
    while n > 0 and buf[n - 1] == 0:
        n -= 1
    return n


# -- decoder state: ds = [code, range, pos]

@njit(cache=True, nogil=True)
def _next_byte(ds, data):
    p = ds[2]
    ds[2] = p + 1
    if p < data.shape[0]:
        return np.int64(data[p])
    return np.int64(0)


@njit(cache=True, nogil=True)
def _dec_init(ds, data):
    ds[0] = 0
    ds[1] = _MASK32
    ds[2] = 0
    for _ in range(4):
        ds[0] = (ds[0] << 8) | _next_byte(ds, data)


@njit(cache=True, nogil=True)
def _dec_target(ds, total):
    r = ds[1] // total
    t = ds[0] // r
    if t >= total:
        t = total - 1
    return t


@njit(cache=True, nogil=True)
def _dec_consume(ds, data, start, freq, total):
    r = ds[1] // total
    ds[0] -= r * start
    ds[1] = r * freq
    while ds[1] < _TOP:
        ds[0] = ((ds[0] << 8) | _next_byte(ds, data)) & _MASK32
        ds[1] <<= 8


# -- plain static-table streams (coder benchmarks and tests)

@njit(cache=True, nogil=True)
def encode_static(symbols, cum):
    buf = np.zeros(16 + 3 * symbols.shape[0], dtype=np.uint8)
    st = np.zeros(6, dtype=np.int64)
    _enc_init(st)
    total = cum[cum.shape[0] - 1]
    for i in range(symbols.shape[0]):
        s = symbols[i]
        _enc_put(st, buf, cum[s], cum[s + 1] - cum[s], total)
    n = _enc_finish(st, buf)
    return buf[:n].copy()


@njit(cache=True, nogil=True)
def _search(cum, target):
    lo = 0
    hi = cum.shape[0] - 2
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if cum[mid] <= target:
            lo = mid
        else:
            hi = mid - 1
    return lo


@njit(cache=True, nogil=True)
def decode_static(data, cum, count):
    out = np.empty(count, dtype=np.int64)
    ds = np.zeros(3, dtype=np.int64)
    _dec_init(ds, data)
    total = cum[cum.shape[0] - 1]
    for i in range(count):
        t = _dec_target(ds, total)
        s = _search(cum, t)
        _dec_consume(ds, data, cum[s], cum[s + 1] - cum[s], total)
        out[i] = s
    return out


# -- context computation

@njit(cache=True, nogil=True)
def context_bucket(vals, side, gmap, r, c, ch, offsets, ctxval, ctx_offset, cq, nq, n_nbins, none_bin, raster, mid,
                   none_pred, use_pred):
    """Bucket id and prediction for pixel (r, c, ch); only reads pixels of earlier groups.

    Coarse feature: the co-located coarse sample, or for raster plans the
    pixel above (else left, else ``mid``).  Neighbour feature: rounded mean
    of the context values of the first four candidate offsets that fall in an
    earlier group.  Without any such neighbour the bin is ``none_bin`` (or
    the bin of the coarse feature itself when ``none_bin`` is negative) and
    the prediction is ``none_pred``; otherwise the prediction is the mean
    itself, taken modulo the alphabet.
    """
    h = gmap.shape[0]
    w = gmap.shape[1]
    mask = ctxval.shape[0] - 1
    g = gmap[r, c]
    if raster:
        if r > 0:
            cval = vals[r - 1, c, ch]
        elif c > 0:
            cval = vals[r, c - 1, ch]
        else:
            cval = mid
    else:
        cval = side[r, c, ch]
    total = 0
    count = 0
    for k in range(offsets.shape[0]):
        rr = r + offsets[k, 0]
        cc = c + offsets[k, 1]
        if rr < 0 or rr >= h or cc < 0 or cc >= w:
            continue
        if gmap[rr, cc] >= g:
            continue
        total += ctxval[vals[rr, cc, ch]]
        count += 1
        if count == MAX_NEIGHBORS:
            break
    if count == 0:
        nb = none_bin if none_bin >= 0 else nq[cval + ctx_offset]
        pred = none_pred
    else:
        mean = (2 * total + count) // (2 * count)
        nb = nq[mean + ctx_offset]
        pred = mean & mask if use_pred else none_pred
    return cq[cval] * n_nbins + nb, pred


@njit(cache=True, nogil=True)
def _adaptive_find(freq, s):
    start = 0
    for k in range(s):
        start += freq[k]
    return start


@njit(cache=True, nogil=True)
def _adaptive_update(freq, totals, row, s, inc, limit):
    if totals[row] + inc > limit:
        t = 0
        for k in range(freq.shape[1]):
            f = (freq[row, k] + 1) >> 1
            freq[row, k] = f
            t += f
        totals[row] = t
    freq[row, s] += inc
    totals[row] += inc


@njit(cache=True, nogil=True)
def _blend_row(freq, b, pfreq, ptotals, pr, prior, out):
    """Bucket counts plus the parent table scaled to ``prior`` total mass; returns the total."""
    pt = ptotals[pr]
    t = 0
    for k in range(freq.shape[1]):
        v = freq[b, k] + (pfreq[pr, k] * prior) // pt
        out[k] = v
        t += v
    return t


@njit(cache=True, nogil=True)
def code_component(
    vals, side, gmap, order, offsets, ctxval, ctx_offset, cq, nq, n_nbins, none_bin, raster, mid, none_pred, use_pred,
    bits, shift, model, n_buckets, static_cum, inc, limit, prior, parent_div, n_parents,
):
    """Encode every sample of a component in plan order.

    The coded symbol is ``(v - prediction + shift) mod 2^bits``.  Returns
    (bytes, ideal code length in bits).  Symbols are split into an 8-bit high
    part coded with the bucket model and a ``bits - 8`` bit low part (only
    for deep images) coded with one component-wide table.

    With ``prior > 0`` the adaptive high-part model of bucket ``k`` is its own
    counts plus the counts of parent table ``k // parent_div`` rescaled to a
    total of ``prior``, so sparse buckets borrow the shape of their parent.
    """
    n_ch = vals.shape[2]
    npx = order.shape[0]
    mask = (1 << bits) - 1
    lo_bits = bits - 8 if bits > 8 else 0
    hi_alpha = 1 << (bits - lo_bits)
    lo_alpha = 1 << lo_bits
    buf = np.zeros(16 + 5 * npx * n_ch, dtype=np.uint8)
    st = np.zeros(6, dtype=np.int64)
    _enc_init(st)
    freq = np.ones((n_buckets, hi_alpha), dtype=np.int64)
    totals = np.full(n_buckets, hi_alpha, dtype=np.int64)
    lo_freq = np.ones((1, lo_alpha), dtype=np.int64)
    lo_totals = np.full(1, lo_alpha, dtype=np.int64)
    pfreq = np.ones((n_parents, hi_alpha), dtype=np.int64)
    ptotals = np.full(n_parents, hi_alpha, dtype=np.int64)
    row = np.empty(hi_alpha, dtype=np.int64)
    blimit = limit - prior
    ideal = 0.0
    for i in range(npx):
        r = order[i, 0]
        c = order[i, 1]
        for ch in range(n_ch):
            b, pred = context_bucket(vals, side, gmap, r, c, ch, offsets, ctxval, ctx_offset, cq, nq, n_nbins,
                                     none_bin, raster, mid, none_pred, use_pred)
            sym = (vals[r, c, ch] - pred + shift) & mask
            hi = sym >> lo_bits
            lo = sym & (lo_alpha - 1)
            if model == MODEL_UNIFORM:
                _enc_put(st, buf, hi, 1, hi_alpha)
                ideal += bits - lo_bits
            elif model == MODEL_STATIC:
                start = static_cum[b, hi]
                f = static_cum[b, hi + 1] - start
                tot = static_cum[b, hi_alpha]
                _enc_put(st, buf, start, f, tot)
                ideal -= np.log2(f / tot)
            elif prior > 0:
                pr = b // parent_div
                tot = _blend_row(freq, b, pfreq, ptotals, pr, prior, row)
                start = _adaptive_find(row, hi)
                f = row[hi]
                _enc_put(st, buf, start, f, tot)
                ideal -= np.log2(f / tot)
                _adaptive_update(freq, totals, b, hi, inc, blimit)
                _adaptive_update(pfreq, ptotals, pr, hi, inc, limit)
            else:
                start = _adaptive_find(freq[b], hi)
                f = freq[b, hi]
                _enc_put(st, buf, start, f, totals[b])
                ideal -= np.log2(f / totals[b])
                _adaptive_update(freq, totals, b, hi, inc, limit)
            if lo_bits:
                if model == MODEL_ADAPTIVE:
                    start = _adaptive_find(lo_freq[0], lo)
                    f = lo_freq[0, lo]
                    _enc_put(st, buf, start, f, lo_totals[0])
                    ideal -= np.log2(f / lo_totals[0])
                    _adaptive_update(lo_freq, lo_totals, 0, lo, inc, limit)
                else:
                    _enc_put(st, buf, lo, 1, lo_alpha)
                    ideal += lo_bits
    n = _enc_finish(st, buf)
    return buf[:n].copy(), ideal


@njit(cache=True, nogil=True)
def _decode_adaptive(ds, data, freq, totals, b, inc, limit):
    tot = totals[b]
    t = _dec_target(ds, tot)
    s = 0
    start = 0
    while start + freq[b, s] <= t:
        start += freq[b, s]
        s += 1
    _dec_consume(ds, data, start, freq[b, s], tot)
    _adaptive_update(freq, totals, b, s, inc, limit)
    return s


@njit(cache=True, nogil=True)
def decode_component(
    data, shape_h, shape_w, n_ch, side, gmap, order, offsets, ctxval, ctx_offset, cq, nq, n_nbins, none_bin,
    raster, mid, none_pred, use_pred, bits, shift, model, n_buckets, static_cum, inc, limit, prior, parent_div, n_parents,
):
    vals = np.zeros((shape_h, shape_w, n_ch), dtype=np.int32)
    npx = order.shape[0]
    mask = (1 << bits) - 1
    lo_bits = bits - 8 if bits > 8 else 0
    hi_alpha = 1 << (bits - lo_bits)
    lo_alpha = 1 << lo_bits
    ds = np.zeros(3, dtype=np.int64)
    _dec_init(ds, data)
    freq = np.ones((n_buckets, hi_alpha), dtype=np.int64)
    totals = np.full(n_buckets, hi_alpha, dtype=np.int64)
    lo_freq = np.ones((1, lo_alpha), dtype=np.int64)
    lo_totals = np.full(1, lo_alpha, dtype=np.int64)
    pfreq = np.ones((n_parents, hi_alpha), dtype=np.int64)
    ptotals = np.full(n_parents, hi_alpha, dtype=np.int64)
    row = np.empty(hi_alpha, dtype=np.int64)
    blimit = limit - prior
    for i in range(npx):
        r = order[i, 0]
        c = order[i, 1]
        for ch in range(n_ch):
            b, pred = context_bucket(vals, side, gmap, r, c, ch, offsets, ctxval, ctx_offset, cq, nq, n_nbins,
                                     none_bin, raster, mid, none_pred, use_pred)
            if model == MODEL_UNIFORM:
                hi = _dec_target(ds, hi_alpha)
                _dec_consume(ds, data, hi, 1, hi_alpha)
            elif model == MODEL_STATIC:
                cum = static_cum[b]
                tot = cum[hi_alpha]
                t = _dec_target(ds, tot)
                hi = _search(cum, t)
                _dec_consume(ds, data, cum[hi], cum[hi + 1] - cum[hi], tot)
            elif prior > 0:
                pr = b // parent_div
                tot = _blend_row(freq, b, pfreq, ptotals, pr, prior, row)
                t = _dec_target(ds, tot)
                hi = 0
                start = 0
                while start + row[hi] <= t:
                    start += row[hi]
                    hi += 1
                _dec_consume(ds, data, start, row[hi], tot)
                _adaptive_update(freq, totals, b, hi, inc, blimit)
                _adaptive_update(pfreq, ptotals, pr, hi, inc, limit)
            else:
                hi = _decode_adaptive(ds, data, freq, totals, b, inc, limit)
            lo = 0
            if lo_bits:
                if model == MODEL_ADAPTIVE:
                    lo = _decode_adaptive(ds, data, lo_freq, lo_totals, 0, inc, limit)
                else:
                    lo = _dec_target(ds, lo_alpha)
                    _dec_consume(ds, data, lo, 1, lo_alpha)
            sym = (hi << lo_bits) | lo
            vals[r, c, ch] = (sym + pred - shift) & mask
    return vals


@njit(cache=True, nogil=True)
def component_symbols(vals, side, gmap, order, offsets, ctxval, ctx_offset, cq, nq, n_nbins, none_bin, raster, mid,
                      none_pred, use_pred, bits, shift):
    """Bucket ids and coded symbols in coding order, from fully known values (encoder side)."""
    n_ch = vals.shape[2]
    npx = order.shape[0]
    mask = (1 << bits) - 1
    buckets = np.empty(npx * n_ch, dtype=np.int32)
    symbols = np.empty(npx * n_ch, dtype=np.int32)
    k = 0
    for i in range(npx):
        r = order[i, 0]
        c = order[i, 1]
        for ch in range(n_ch):
            b, pred = context_bucket(vals, side, gmap, r, c, ch, offsets, ctxval, ctx_offset, cq, nq, n_nbins,
                                     none_bin, raster, mid, none_pred, use_pred)
            buckets[k] = b
            symbols[k] = (vals[r, c, ch] - pred + shift) & mask
            k += 1
    return buckets, symbols
