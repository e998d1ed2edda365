from __future__ import annotations

import colorsys
import math

import numpy as np
import pytest
from sklearn.ensemble import IsolationForest

from pyrcodec.errors import DomainError
from pyrcodec.image import Image
from pyrcodec.postprocess import (
    IsolationForestConfig, average_path_length, despeckle, despeckle_with_mask, hsv_to_rgb, isolation_forest,
    isolation_scores, median_filter, outlier_mask, psnr, rgb_to_hsv, top_fraction_mask,
)


def test_hsv_matches_colorsys():
    rng = np.random.default_rng(0)
    img = Image.random((20, 20, 3), 8, rng)
    hsv = rgb_to_hsv(img)
    for r in range(0, 20, 3):
        for c in range(20):
            h, s, v = colorsys.rgb_to_hsv(*(img.pixels[r, c] / 255.0))
            assert hsv[r, c, 0] == pytest.approx(360.0 * h, abs=1e-9)
            assert hsv[r, c, 1:] == pytest.approx([s, v], abs=1e-12)


def test_hsv_round_trip_all_grey_and_primaries():
    px = np.array([[[0, 0, 0], [255, 255, 255], [255, 0, 0], [0, 255, 0], [0, 0, 255], [12, 200, 99]]], np.uint16)
    img = Image(px, 8)
    assert hsv_to_rgb(rgb_to_hsv(img)) == img
    with pytest.raises(DomainError):
        rgb_to_hsv(Image(np.zeros((2, 2, 1), np.uint16), 8))


def test_median_filter_against_brute_force():
    rng = np.random.default_rng(1)
    img = Image.random((9, 11, 2), 8, rng)
    out = median_filter(img, 3)
    padded = np.pad(img.pixels, ((1, 1), (1, 1), (0, 0)), mode="edge")
    for r in range(9):
        for c in range(11):
            for ch in range(2):
                assert out.pixels[r, c, ch] == np.median(padded[r:r + 3, c:c + 3, ch])
    with pytest.raises(DomainError):
        median_filter(img, 4)


def test_average_path_length_values():
    assert average_path_length(1) == 0.0
    assert average_path_length(2) == 1.0
    # harmonic-number form 2 H(n-1) - 2 (n-1) / n; ln(n-1) + gamma undershoots H(n-1) by about 1 / (2 (n-1))
    for n in (16, 256, 4096):
        exact = 2 * sum(1.0 / i for i in range(1, n)) - 2 * (n - 1) / n
        assert float(average_path_length(n)) == pytest.approx(exact, abs=1.05 / (n - 1))


def test_top_fraction_mask_ties_and_size():
    mask = top_fraction_mask(np.array([0.5, 0.9, 0.9, 0.1]), 0.3)
    assert mask.tolist() == [False, True, True, False]
    assert top_fraction_mask(np.array([0.9, 0.9, 0.9]), 0.2).tolist() == [True, False, False]


def test_forest_agrees_with_sklearn_on_clear_outliers():
    rng = np.random.default_rng(2)
    inliers = rng.normal(0, 1, size=(2000, 3))
    outliers = rng.normal(0, 1, size=(10, 3)) + 9.0
    x = np.vstack([inliers, outliers])
    ours = isolation_forest(x, contamination=0.005, seed=0)
    ref = IsolationForest(n_estimators=100, max_samples=256, contamination=0.005, random_state=0).fit(x)
    theirs = ref.predict(x) == -1
    assert ours[-10:].all() and theirs[-10:].all()
    ours_scores = isolation_scores(x, seed=0)
    rho = np.corrcoef(np.argsort(np.argsort(ours_scores)), np.argsort(np.argsort(-ref.score_samples(x))))[0, 1]
    assert rho > 0.9


def test_forest_is_seed_deterministic():
    x = np.random.default_rng(3).normal(size=(500, 2))
    assert np.array_equal(isolation_scores(x, seed=7), isolation_scores(x, seed=7))


def test_config_validation():
    with pytest.raises(DomainError):
        IsolationForestConfig(contamination=0.0)
    with pytest.raises(DomainError):
        IsolationForestConfig(trees=0)


def _speckled(seed=4, shape=(100, 120), level=90):
    rng = np.random.default_rng(seed)
    h, w = shape
    clean = Image(np.full((h, w, 3), level, np.uint16), 8)
    px = clean.pixels.copy()
    idx = rng.choice(h * w, size=12, replace=False)
    px.reshape(-1, 3)[idx] = 255
    return clean, Image(px, 8), idx


def test_despeckle_leaves_unflagged_pixels_identical():
    clean, noisy, idx = _speckled()
    result = despeckle_with_mask(noisy, 5, IsolationForestConfig(contamination=0.002))
    assert np.array_equal(result.image.pixels[~result.mask], noisy.pixels[~result.mask])
    assert result.mask.reshape(-1)[idx].all()
    assert result.image == clean
    assert result.mask.sum() <= math.ceil(0.002 * noisy.height * noisy.width)
    assert psnr(clean, result.image) == math.inf


def test_neighbourhood_features_flag_only_near_speckles():
    # every window containing a speckle is equally isolated, so flags land within one pixel of a speckle
    clean, noisy, idx = _speckled(seed=8)
    mask = outlier_mask(noisy, IsolationForestConfig(contamination=0.002), neighborhood=3)
    rows, cols = np.divmod(idx, noisy.width)
    for r, c in zip(*np.nonzero(mask)):
        assert np.min(np.maximum(abs(rows - r), abs(cols - c))) <= 1
    assert mask.sum() == math.ceil(0.002 * noisy.height * noisy.width)
    assert despeckle(noisy, 7, neighborhood=3).pixels.max() <= 255


def test_psnr_reference_value():
    a = Image(np.zeros((2, 2, 1), np.uint16), 8)
    b = Image(np.array([[[255], [0]], [[0], [0]]], np.uint16), 8)
    assert psnr(a, b) == pytest.approx(10 * math.log10(4))
