from __future__ import annotations

import numpy as np
import pytest

from pyrcodec.container import dump_pyramid, load_pyramid
from pyrcodec.errors import FormatError
from pyrcodec.image import Image
from pyrcodec.ppm import decode_ppm, encode_ppm, read_image, write_image
from pyrcodec.pyramid import build_pyramid, invert_pyramid


@pytest.mark.parametrize("shape,b", [((3, 5, 3), 8), ((4, 2, 1), 5), ((2, 3, 3), 16), ((1, 1, 1), 1)])
def test_ppm_round_trip(shape, b):
    img = Image.random(shape, b, np.random.default_rng(0))
    assert decode_ppm(encode_ppm(img)) == img


def test_ppm_comments_and_big_endian():
    data = b"P5\n# made by hand\n2 1\n# another\n1000\n" + bytes([0x03, 0xE8, 0x00, 0x01])
    img = decode_ppm(data)
    assert img.bit_depth == 10
    assert img.pixels.ravel().tolist() == [1000, 1]


def test_ppm_errors():
    with pytest.raises(FormatError):
        decode_ppm(b"P3\n1 1\n255\n0 0 0")
    with pytest.raises(FormatError):
        decode_ppm(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(FormatError):
        decode_ppm(b"P5\n1 1\n7\n" + bytes([9]))


def test_png_round_trip(tmp_path):
    pytest.importorskip("PIL")
    rgb = Image.random((6, 4, 3), 8, np.random.default_rng(1))
    write_image(tmp_path / "a.png", rgb)
    assert read_image(tmp_path / "a.png") == rgb
    grey16 = Image.random((5, 5, 1), 16, np.random.default_rng(2))
    write_image(tmp_path / "b.png", grey16)
    assert read_image(tmp_path / "b.png") == grey16


def test_container_round_trip():
    img = Image.random((16, 8, 3), 12, np.random.default_rng(3))
    pyr = build_pyramid(img, 5)
    back = load_pyramid(dump_pyramid(pyr))
    assert invert_pyramid(back) == img
    assert [lvl.axis for lvl in back.levels] == [lvl.axis for lvl in pyr.levels]


def test_container_errors():
    data = dump_pyramid(build_pyramid(Image.random((8, 8, 1), 8, np.random.default_rng(4)), 3))
    with pytest.raises(FormatError, match="version"):
        load_pyramid(data[:4] + bytes([7]) + data[5:])
    with pytest.raises(FormatError):
        load_pyramid(b"NOPE" + data[4:])
    with pytest.raises(FormatError):
        load_pyramid(data[:-1])
    with pytest.raises(FormatError):
        load_pyramid(data + b"\0")
