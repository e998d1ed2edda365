from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import entropy as scipy_entropy
from sklearn.metrics import mutual_info_score

from pyrcodec.errors import DomainError
from pyrcodec.image import Image
from pyrcodec.pyramid import build_pyramid
from pyrcodec.stats import (
    Histogram, entropy_of_counts, marginal_entropy, mutual_information_curve, mutual_information_pairs,
    offset_mutual_information, pyramid_components, pyramid_entropy_profile,
)


def test_entropy_matches_scipy():
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 40, 256)
    assert entropy_of_counts(counts) == pytest.approx(scipy_entropy(counts, base=2), abs=1e-12)
    assert entropy_of_counts([5, 0, 0]) == 0.0


def test_histogram_merge_and_pooling():
    a = Histogram.of([0, 1, 1, 3], 2)
    b = Histogram.of([3, 3], 2)
    assert a.merge(b).counts.tolist() == [1, 2, 0, 3]
    imgs = [Image(np.array([[[0], [1]]], np.uint16), 2), Image(np.array([[[1], [1]]], np.uint16), 2)]
    assert marginal_entropy(imgs) == pytest.approx(scipy_entropy([1, 3], base=2))


def test_pairs_mi_matches_sklearn():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 16, 5000)
    y = (x + rng.integers(0, 4, 5000)) % 16
    mi, bias = mutual_information_pairs(x, y, 16)
    assert mi == pytest.approx(mutual_info_score(x, y) / np.log(2), abs=1e-10)
    assert 0 < bias < 0.1


def test_offset_mi_of_independent_noise_is_small():
    rng = np.random.default_rng(2)
    imgs = [Image.random((64, 64, 1), 4, rng) for _ in range(4)]
    mi, bias = offset_mutual_information(imgs, (0, 1))
    assert mi < 3 * bias


def test_mi_curve_shapes_and_clamp():
    rng = np.random.default_rng(3)
    imgs = [Image.random((32, 32, 1), 3, rng) for _ in range(3)]
    curve = mutual_information_curve(imgs, 8)
    assert curve.distances.tolist() == list(range(1, 9))
    assert np.all(curve.mi_bits == 0.5 * (curve.mi_horizontal + curve.mi_vertical))
    raw = mutual_information_curve(imgs, 8, clamp_bias=False)
    assert np.all(raw.mi_bits >= curve.mi_bits)


def test_mi_curve_of_vertical_stripes():
    # columns repeat with period 2: horizontal lag 2 is fully dependent, vertical lags trivially so
    row = np.tile([0, 3], 8)
    img = Image(np.repeat(row[None, :], 16, axis=0)[:, :, None].astype(np.uint16), 2)
    curve = mutual_information_curve([img], 4)
    assert curve.mi_horizontal[1] == pytest.approx(1.0)


def test_mi_curve_distance_errors():
    img = Image(np.zeros((8, 8, 1), np.uint16), 8)
    with pytest.raises(DomainError):
        mutual_information_curve([img], 8)
    with pytest.raises(DomainError):
        mutual_information_curve([img], 0)


def test_entropy_profile_labels_and_values():
    rng = np.random.default_rng(4)
    imgs = [Image.random((8, 8, 1), 8, rng) for _ in range(2)]
    profile = pyramid_entropy_profile(imgs, 3)
    assert [k for k, _ in profile] == ["original", "F1", "F2", "F3", "I3"]
    pyrs = [build_pyramid(img, 3) for img in imgs]
    f2 = np.concatenate([p.levels[1].fine.pixels.ravel() for p in pyrs])
    assert dict(profile)["F2"] == pytest.approx(entropy_of_counts(np.bincount(f2, minlength=256)))
    comps = pyramid_components(imgs, 3)
    assert len(comps["I3"]) == 2 and comps["I3"][0].shape == (2, 4, 1)
