from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyrcodec.errors import DomainError, ShapeError
from pyrcodec.scan import critical_path, make_scan_plan, max_squeeze, raster_plan, squeeze, unsqueeze


def test_squeeze_position_mapping():
    rng = np.random.default_rng(1)
    arr = rng.integers(0, 100, size=(4, 6, 2))
    out = squeeze(arr)
    assert out.shape == (2, 3, 8)
    for r in range(4):
        for c in range(6):
            for ch in range(2):
                assert out[r // 2, c // 2, (2 * (r % 2) + c % 2) * 2 + ch] == arr[r, c, ch]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 3), hm=st.integers(1, 3), wm=st.integers(1, 3), ch=st.integers(1, 3))
def test_unsqueeze_inverts_squeeze(n, hm, wm, ch):
    arr = np.arange(hm * (1 << n) * wm * (1 << n) * ch).reshape(hm << n, wm << n, ch)
    assert np.array_equal(unsqueeze(squeeze(arr, n), n), arr)


def test_squeeze_rejects_indivisible():
    with pytest.raises(ShapeError):
        squeeze(np.zeros((6, 4, 1)), 2)


def test_scan_plan_partition():
    plan = make_scan_plan(8, 8, 2)
    assert plan.num_groups == 16
    seen = np.zeros((8, 8), dtype=int)
    for g, pix in enumerate(plan.groups):
        assert len(pix) == 4
        for r, c in pix:
            assert plan.group_map[r, c] == g
            seen[r, c] += 1
    assert (seen == 1).all()
    # first group: top-left pixel of every 4 x 4 block
    assert sorted(map(tuple, plan.groups[0].tolist())) == [(0, 0), (0, 4), (4, 0), (4, 4)]


def test_outer_squeeze_most_significant():
    plan = make_scan_plan(4, 4, 2)
    # pixel (0, 2) sits in the top-right 2 x 2 block of the outer squeeze, inner position TL
    assert plan.group_map[0, 2] == 4 * 1 + 0
    # pixel (1, 0) sits in the outer TL block, inner position BL
    assert plan.group_map[1, 0] == 2


def test_raster_plan_one_pixel_per_group():
    plan = raster_plan(3, 5)
    assert plan.num_groups == 15
    assert plan.order[:3].tolist() == [[0, 0], [0, 1], [0, 2]]


def test_max_squeeze_clamps():
    assert max_squeeze(12, 8, 3) == 2
    assert max_squeeze(3, 8, 2) == 0


def test_critical_path_values():
    assert critical_path(1024, 1, 2).total_steps == 305
    # 256 x 256 with a 4 x 4 coarsest: 16 + 11 * 16
    report = critical_path(256, 4, 2)
    assert report.num_levels == 12 and report.total_steps == 192
    assert report.rows()[-1] == (12, 16)
    assert critical_path(16, 4, [0, 1, 2]).total_steps == 16 + 1 + 4 + 16


def test_critical_path_errors():
    with pytest.raises(DomainError):
        critical_path(100, 4, 2)
    with pytest.raises(DomainError):
        critical_path(16, 4, [1, 2])
    with pytest.raises(DomainError):
        critical_path(4, 8, 1)
