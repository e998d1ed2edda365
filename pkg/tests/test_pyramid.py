from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyrcodec.errors import DomainError, ShapeError
from pyrcodec.image import Image
from pyrcodec.pyramid import (
    Axis, auto_levels, build_pyramid, decompose_step, invert_pyramid, level_shapes, max_levels, mod_add,
    mod_add_array, mod_diff, mod_diff_array, reconstruct_step,
)


def test_mod_arrays_match_scalar_ops():
    for b in (1, 3, 8):
        k = 1 << b
        x, y = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
        f = mod_diff_array(x, y, b)
        assert np.array_equal(f, (x - y) % k)
        assert np.array_equal(mod_add_array(f, y, b), x)
        assert all(f[i, j] == mod_diff(i, j, b) for i in range(k) for j in range(k))


def test_mod_16_bit_extremes():
    assert mod_diff(0, 65535, 16) == 1
    assert mod_diff(65535, 0, 16) == 65535
    assert mod_add(1, 65535, 16) == 0


def test_mod_rejects_out_of_range():
    with pytest.raises(DomainError):
        mod_diff(256, 0, 8)
    with pytest.raises(DomainError):
        mod_add(0, -1, 8)


def test_axis_alternates_rows_first():
    assert [Axis.for_level(i) for i in (1, 2, 3, 4)] == [Axis.ROWS, Axis.COLS, Axis.ROWS, Axis.COLS]


def test_decompose_step_hand_example():
    px = np.array([[10, 20], [5, 250], [7, 7], [0, 1]], dtype=np.uint16)[:, :, None]
    coarse, fine = decompose_step(Image(px, 8), Axis.ROWS)
    assert coarse.pixels[:, :, 0].tolist() == [[10, 20], [7, 7]]
    # (5 - 10) mod 256 = 251, (250 - 20) = 230, (0 - 7) mod 256 = 249, (1 - 7) mod 256 = 250
    assert fine.pixels[:, :, 0].tolist() == [[251, 230], [249, 250]]
    assert reconstruct_step(coarse, fine, Axis.ROWS) == Image(px, 8)


def test_decompose_step_odd_extent():
    with pytest.raises(ShapeError):
        decompose_step(Image(np.zeros((3, 4, 1), np.uint16), 8), Axis.ROWS)


def test_level_shapes_and_auto_levels():
    assert level_shapes((8, 8, 3), 3) == [(4, 8, 3), (4, 4, 3), (2, 4, 3)]
    assert auto_levels((128, 128, 3)) == 10
    assert auto_levels((256, 256, 1)) == 12
    assert auto_levels((1024, 1024, 3)) == 16
    assert max_levels((8, 8, 1)) == 6
    with pytest.raises(ShapeError):
        level_shapes((8, 6, 1), 4)


def test_pyramid_sample_count_preserved():
    rng = np.random.default_rng(0)
    img = Image.random((32, 16, 3), 8, rng)
    pyr = build_pyramid(img, 7)
    assert pyr.sample_count() == img.size
    assert pyr.coarsest.shape == (2, 2, 3)


@settings(max_examples=60, deadline=None)
@given(
    a=st.integers(0, 5), c=st.integers(0, 5), ch=st.sampled_from([1, 3]), b=st.integers(1, 16),
    seed=st.integers(0, 2**32 - 1), frac=st.floats(0, 1),
)
def test_pyramid_round_trip_property(a, c, ch, b, seed, frac):
    shape = (1 << a, 1 << c, ch)
    img = Image.random(shape, b, np.random.default_rng(seed))
    levels = int(round(frac * max_levels(shape)))
    pyr = build_pyramid(img, levels)
    assert pyr.num_levels == levels
    assert invert_pyramid(pyr) == img
    for lvl in pyr.levels:
        assert lvl.fine.pixels.max(initial=0) <= img.maxval
