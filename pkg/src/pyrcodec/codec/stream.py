"""Byte layout of a coded image.

All integers are little-endian::

    "PPYC"  version:u8  height:u32  width:u32  channels:u8  bit_depth:u8
    L:u8  shift:u16  n_squeeze:u8 * L  model_mode:u8  model payload
    substream length:u64 * (L + 1)  substreams  crc32:u32

Substreams are ordered F_1 .. F_L, then the coarsest image.  The model
payload is::

    flags:u8   bit 0: fine components hold raw removed rows, not modulo differences
               bit 1: neighbour feature of fine components is the signed residual
                      (default: residual magnitude)
               bit 2: fine components are coded relative to a neighbour prediction
               bit 3: raw components are coded relative to a neighbour prediction
    coarse_bins-1:u8  neighbor_bins-1:u8  increment:u16  limit:u32  prior:u16
    model id:u8 * (L + 1)                (0 adaptive, 1 uniform, 2 static)
    for every static component:  records:u16, then records * (bucket:u16, mixture)

A mixture record is ``M:u16`` followed by ``3M`` float64 (weights, means,
scales); bucket ``0xFFFF`` is the component-wide fallback.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError, IntegrityError
from ..logistic import LogisticMixtureParams

MAGIC = b"PPYC"
VERSION = 1
FALLBACK_BUCKET = 0xFFFF
FLAG_NO_MODULO = 1
FLAG_SIGNED_FEATURE = 2
FLAG_PREDICT_RESIDUAL = 4
FLAG_PREDICT_RAW = 8


@dataclass
class ComponentModel:
    model_id: int
    # bucket -> mixture, only for static components
    mixtures: dict[int, LogisticMixtureParams] = field(default_factory=dict)


@dataclass
class CodedStream:
    height: int
    width: int
    channels: int
    bit_depth: int
    n_squeeze: list[int]
    shift: int
    static: bool
    no_modulo: bool
    coarse_bins: int
    neighbor_bins: int
    increment: int
    limit: int
    prior: int
    residual_feature: str
    predict_residual: bool
    predict_raw: bool
    components: list[ComponentModel]
    payloads: list[bytes]
    crc: int
    version: int = VERSION
    # encoder-side diagnostics, never serialised
    ideal_bits: list[float] | None = field(default=None, compare=False, repr=False)

    @property
    def num_levels(self) -> int:
        return len(self.n_squeeze)

    def header_bytes(self) -> bytes:
        out = bytearray(MAGIC)
        out += struct.pack("<BIIBBBH", self.version, self.height, self.width, self.channels,
                           self.bit_depth, self.num_levels, self.shift)
        out += bytes(self.n_squeeze)
        out += struct.pack("<B", 1 if self.static else 0)
        flags = (
            (FLAG_NO_MODULO if self.no_modulo else 0)
            | (FLAG_SIGNED_FEATURE if self.residual_feature == "signed" else 0)
            | (FLAG_PREDICT_RESIDUAL if self.predict_residual else 0)
            | (FLAG_PREDICT_RAW if self.predict_raw else 0)
        )
        out += struct.pack("<BBBHIH", flags, self.coarse_bins - 1, self.neighbor_bins - 1,
                           self.increment, self.limit, self.prior)
        out += bytes(comp.model_id for comp in self.components)
        for comp in self.components:
            if comp.model_id != 2:
                continue
            out += struct.pack("<H", len(comp.mixtures))
            for bucket in sorted(comp.mixtures):
                out += struct.pack("<H", bucket) + comp.mixtures[bucket].to_bytes()
        out += struct.pack(f"<{len(self.payloads)}Q", *(len(p) for p in self.payloads))
        return bytes(out)

    def to_bytes(self) -> bytes:
        return self.header_bytes() + b"".join(self.payloads) + struct.pack("<I", self.crc)

    @classmethod
    def from_bytes(cls, data: bytes) -> CodedStream:
        data = bytes(data)
        if data[:4] != MAGIC:
            raise FormatError("not a PPYC stream (bad magic)")
        try:
            version, h, w, c, b, n_levels, shift = struct.unpack_from("<BIIBBBH", data, 4)
            if version != VERSION:
                raise FormatError(f"unsupported PPYC version {version} (expected {VERSION})")
            pos = 4 + struct.calcsize("<BIIBBBH")
            n_squeeze = list(data[pos:pos + n_levels])
            if len(n_squeeze) != n_levels:
                raise FormatError("truncated header")
            pos += n_levels
            (mode,) = struct.unpack_from("<B", data, pos)
            pos += 1
            flags, cb, nb, inc, limit, prior = struct.unpack_from("<BBBHIH", data, pos)
            pos += struct.calcsize("<BBBHIH")
            ids = list(data[pos:pos + n_levels + 1])
            if len(ids) != n_levels + 1:
                raise FormatError("truncated header")
            pos += n_levels + 1
            components = []
            for model_id in ids:
                if model_id not in (0, 1, 2):
                    raise FormatError(f"unknown component model {model_id}")
                comp = ComponentModel(model_id)
                if model_id == 2:
                    (count,) = struct.unpack_from("<H", data, pos)
                    pos += 2
                    for _ in range(count):
                        (bucket,) = struct.unpack_from("<H", data, pos)
                        comp.mixtures[bucket], pos = LogisticMixtureParams.from_bytes(data, b, pos + 2)
                components.append(comp)
            lengths = struct.unpack_from(f"<{n_levels + 1}Q", data, pos)
            pos += 8 * (n_levels + 1)
        except struct.error as exc:
            raise FormatError(f"truncated header: {exc}") from None
        if (not (1 <= b <= 16 and h > 0 and w > 0 and c > 0) or mode not in (0, 1) or flags > 15
                or not 0 < inc < limit - prior or limit > 1 << 16 or shift >= 1 << b):
            raise FormatError("corrupt header fields")
        end = pos + sum(lengths)
        if end + 4 > len(data):
            raise IntegrityError(f"payload truncated: need {end + 4} bytes, have {len(data)}")
        payloads = []
        for n in lengths:
            payloads.append(data[pos:pos + n])
            pos += n
        (crc,) = struct.unpack_from("<I", data, pos)
        return cls(h, w, c, b, n_squeeze, shift, bool(mode), bool(flags & FLAG_NO_MODULO),
                   cb + 1, nb + 1, inc, limit, prior,
                   "signed" if flags & FLAG_SIGNED_FEATURE else "magnitude",
                   bool(flags & FLAG_PREDICT_RESIDUAL), bool(flags & FLAG_PREDICT_RAW),
                   components, payloads, crc, version)


def image_crc(pixels: np.ndarray, bit_depth: int) -> int:
    """CRC32 of the samples, row-major, one (b <= 8) or two little-endian bytes each."""
    dtype = "<u1" if bit_depth <= 8 else "<u2"
    return zlib.crc32(np.ascontiguousarray(pixels).astype(dtype).tobytes()) & 0xFFFFFFFF
