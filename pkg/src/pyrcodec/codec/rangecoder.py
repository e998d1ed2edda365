"""32-bit multi-symbol range coder with carry propagation.

The coder follows the classic cache + carry-count design: ``low`` holds 33
bits, ``range`` is renormalised to at least 2^24 by shifting out whole bytes,
and a pending run of 0xFF bytes absorbs a late carry.  Frequency totals must
not exceed 2^16.

Two conventions keep the streams short: the always-zero leading byte is not
written, and the flush picks a final value whose low 24 bits are zero and
then drops every trailing zero byte.  Decoders therefore read missing bytes
as zero.

This module is the pure-Python reference used for the public primitive API;
``_kernels`` carries the compiled twin that the image codec runs on.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

MAX_TOTAL = 1 << 16
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


def check_table(cum) -> None:
    if len(cum) < 2 or cum[0] != 0:
        raise DomainError("cumulative table must start at 0 and hold at least one symbol")
    total = cum[-1]
    if not 0 < total <= MAX_TOTAL:
        raise DomainError(f"table total must be in (0, {MAX_TOTAL}], got {total}")


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()
        self._started = False
        self.ideal_bits = 0.0

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            temp = self._cache
            while True:
                if self._started:
                    self._out.append((temp + carry) & 0xFF)
                self._started = True
                temp = 0xFF
                self._cache_size -= 1
                if not self._cache_size:
                    break
            self._cache = (low >> 24) & 0xFF
        self._cache_size += 1
        self.low = (low & 0x00FFFFFF) << 8

    def encode(self, symbol: int, cum) -> None:
        """Code ``symbol`` with the interval ``[cum[symbol], cum[symbol+1])`` of ``cum[-1]``."""
        start, stop, total = int(cum[symbol]), int(cum[symbol + 1]), int(cum[-1])
        if stop <= start:
            raise DomainError(f"symbol {symbol} has zero frequency")
        if total > MAX_TOTAL:
            raise DomainError(f"table total {total} exceeds {MAX_TOTAL}")
        r = self.range // total
        self.low += r * start
        self.range = r * (stop - start)
        self.ideal_bits -= math.log2((stop - start) / total)
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def finish(self) -> bytes:
        self.low = (self.low + _TOP - 1) & ~(_TOP - 1)
        self._shift_low()
        self._shift_low()
        return bytes(self._out).rstrip(b"\x00")


class RangeDecoder:
    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0
        self.range = _MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._next()

    def _next(self) -> int:
        if self._pos < len(self._data):
            b = self._data[self._pos]
        else:
            b = 0
        self._pos += 1
        return b

    def decode(self, cum) -> int:
        total = int(cum[-1])
        r = self.range // total
        target = min(self.code // r, total - 1)
        symbol = int(np.searchsorted(cum, target, side="right")) - 1
        start, stop = int(cum[symbol]), int(cum[symbol + 1])
        self.code -= r * start
        self.range = r * (stop - start)
        while self.range < _TOP:
            self.code = ((self.code << 8) | self._next()) & _MASK32
            self.range <<= 8
        return symbol


class AdaptiveFrequencyTable:
    """Counts that start at one per symbol and grow by ``increment``.

    When the total would pass ``limit`` every count is halved (rounding up),
    so no symbol ever drops to zero.
    """

    def __init__(self, alphabet: int, increment: int = 32, limit: int = MAX_TOTAL):
        if alphabet > limit:
            raise DomainError(f"alphabet {alphabet} does not fit a total of {limit}")
        self.freq = np.ones(alphabet, dtype=np.int64)
        self.increment = increment
        self.limit = limit

    @property
    def cum(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.freq)))

    def update(self, symbol: int) -> None:
        if self.freq.sum() + self.increment > self.limit:
            self.freq = (self.freq + 1) >> 1
        self.freq[symbol] += self.increment


def quantize_pmf(pmf: np.ndarray, total: int = MAX_TOTAL) -> np.ndarray:
    """Integer frequencies summing to ``total`` with a floor of one per symbol.

    Each symbol gets ``1 + floor(p * (total - K))``; the rounding remainder
    goes to the most probable symbol.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    k = pmf.size
    if k > total:
        raise DomainError(f"alphabet {k} does not fit a total of {total}")
    p = np.clip(pmf, 0.0, None)
    s = p.sum()
    p = p / s if s > 0 else np.full(k, 1.0 / k)
    freq = 1 + np.floor(p * (total - k)).astype(np.int64)
    freq[int(np.argmax(p))] += total - int(freq.sum())
    return freq


def cumulative(freq) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(freq))).astype(np.int64)
