"""Binary PPM/PGM (P6/P5) reading and writing, plus optional PNG via Pillow.

Samples above 255 use two bytes, most significant first.  The bit depth of
a loaded image is the bit length of its maxval, so a file with maxval 31
becomes a 5-bit image; files are always written with maxval ``2^b - 1``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError
from .image import Image

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[int], int]:
    """Read ``count`` header integers, skipping whitespace and ``#`` comments."""
    out = []
    while len(out) < count:
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        try:
            out.append(int(data[start:pos]))
        except ValueError:
            raise FormatError(f"bad PPM header field {data[start:pos]!r}") from None
    return out, pos


def decode_ppm(data: bytes) -> Image:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"not a binary PPM/PGM file (magic {magic!r})")
    (width, height, maxval), pos = _tokens(data, 3, 2)
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"invalid PPM dimensions {width}x{height} or maxval {maxval}")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError("missing whitespace after PPM header")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height * channels
    raw = data[pos:pos + n * dtype.itemsize]
    if len(raw) < n * dtype.itemsize:
        raise FormatError(f"truncated PPM payload: {len(raw)} of {n * dtype.itemsize} bytes")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width, channels)
    if pixels.max(initial=0) > maxval:
        raise FormatError(f"sample exceeds maxval {maxval}")
    return Image(pixels.astype(np.uint16), int(maxval).bit_length())


def encode_ppm(img: Image) -> bytes:
    if img.channels not in (1, 3):
        raise FormatError(f"PPM holds 1 or 3 channels, got {img.channels}")
    magic = b"P6" if img.channels == 3 else b"P5"
    header = magic + f"\n{img.width} {img.height}\n{img.maxval}\n".encode()
    dtype = ">u2" if img.maxval > 255 else "u1"
    return header + img.pixels.astype(dtype).tobytes()


def read_ppm(path) -> Image:
    return decode_ppm(Path(path).read_bytes())


def write_ppm(path, img: Image) -> None:
    Path(path).write_bytes(encode_ppm(img))


def _pillow():
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise FormatError("PNG support needs Pillow (pip install 'artifact[png]')") from None
    return PILImage


def read_image(path) -> Image:
    """Load a PPM/PGM, or a PNG when Pillow is installed (8- or 16-bit, gray or RGB)."""
    path = Path(path)
    if path.suffix.lower() != ".png":
        return read_ppm(path)
    pil = _pillow()
    try:
        with pil.open(path) as im:
            mode = im.mode
            arr = np.asarray(im)
    except OSError as exc:
        raise FormatError(f"cannot read PNG {path}: {exc}") from None
    if mode in ("I;16", "I;16B", "I"):
        return Image(arr.astype(np.uint16), 16)
    if mode not in ("L", "RGB"):
        raise FormatError(f"unsupported PNG mode {mode}")
    return Image(arr, 8)


def write_image(path, img: Image) -> None:
    path = Path(path)
    if path.suffix.lower() != ".png":
        write_ppm(path, img)
        return
    pil = _pillow()
    if img.bit_depth > 8:
        if img.channels != 1:
            raise FormatError("16-bit PNG output is limited to grayscale; use PPM")
        pil.fromarray(img.pixels[:, :, 0].astype(np.uint16)).save(path)
        return
    if img.channels not in (1, 3):
        raise FormatError(f"PNG output needs 1 or 3 channels, got {img.channels}")
    arr = img.pixels.astype(np.uint8)
    pil.fromarray(arr[:, :, 0] if img.channels == 1 else arr).save(path)
