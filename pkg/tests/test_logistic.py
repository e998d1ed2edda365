from __future__ import annotations

import numpy as np
import pytest
from scipy import stats as sps

from pyrcodec.errors import DomainError
from pyrcodec.image import Image
from pyrcodec.logistic import (
    FitConfig, LogisticMixtureParams, binned_pmf, cyclic_shift, fit, log_likelihood, pmf, pmf_table, sample,
)
from pyrcodec.stats import Histogram


def _scipy_table(params):
    """Independent route: interval masses of scipy's logistic, edge bins absorbing the tails."""
    k = params.support
    edges = np.arange(k + 1) - 0.5
    edges[0], edges[-1] = -np.inf, np.inf
    table = np.zeros(k)
    for w, mu, s in zip(params.weights, params.means, params.scales):
        table += w * np.diff(sps.logistic.cdf(edges, loc=mu, scale=s))
    return table


@pytest.mark.parametrize("b,m", [(1, 1), (5, 2), (8, 3), (10, 4)])
def test_pmf_matches_scipy(b, m):
    rng = np.random.default_rng(b)
    k = 1 << b
    params = LogisticMixtureParams(rng.dirichlet(np.ones(m)), rng.uniform(0, k, m), rng.uniform(0.5, k / 4 + 1, m), b)
    np.testing.assert_allclose(pmf_table(params), _scipy_table(params), atol=1e-12)
    assert pmf(params, 0) == pytest.approx(pmf_table(params)[0])


def test_pmf_far_tail_stays_normalised():
    params = LogisticMixtureParams.single(-1e4, 1e-3, 8)
    table = pmf_table(params)
    assert table[0] == pytest.approx(1.0, abs=1e-12)
    assert table.sum() == pytest.approx(1.0, abs=1e-12)


def test_pmf_rejects_out_of_range():
    params = LogisticMixtureParams.single(3.0, 1.0, 3)
    with pytest.raises(DomainError):
        pmf(params, 8)


def test_params_validation():
    with pytest.raises(DomainError):
        LogisticMixtureParams([0.5, 0.4], [1, 2], [1, 1], 8)
    with pytest.raises(DomainError):
        LogisticMixtureParams([1.0], [1.0], [0.0], 8)


def test_params_bytes_round_trip():
    params = LogisticMixtureParams([0.25, 0.75], [3.5, 200.0], [1.5, 20.0], 8)
    data = b"xx" + params.to_bytes()
    back, end = LogisticMixtureParams.from_bytes(data, 8, offset=2)
    assert end == len(data)
    np.testing.assert_allclose(pmf_table(back), pmf_table(params), atol=1e-6)


def test_binned_pmf_sums_groups():
    params = LogisticMixtureParams([0.3, 0.7], [100.0, 900.0], [30.0, 50.0], 10)
    fine = pmf_table(params)
    np.testing.assert_allclose(binned_pmf(params, 2), fine.reshape(256, 4).sum(axis=1), atol=1e-12)


def test_uniform_histogram_single_component_grid_oracle():
    """M=1 fit on a flat histogram agrees with a brute-force grid search over (mu, s)."""
    hist = Histogram(np.ones(16, dtype=np.int64), 4)
    result = fit(hist, 1, FitConfig(restarts=3))
    best = np.inf
    for mu in np.linspace(-4, 20, 97):
        for s in np.exp(np.linspace(np.log(0.5), np.log(64), 97)):
            best = min(best, log_likelihood(LogisticMixtureParams.single(mu, s, 4), hist)[1])
    assert result.bits_per_sample <= best + 1e-6
    assert result.bits_per_sample >= 4.0 - 1e-9  # nothing beats the true uniform entropy


def test_fit_never_worse_than_start():
    rng = np.random.default_rng(3)
    truth = LogisticMixtureParams([0.5, 0.5], [40.0, 200.0], [5.0, 9.0], 8)
    hist = Histogram.of(sample(truth, rng, 20000), 8)
    result = fit(hist, 3, FitConfig(restarts=2))
    assert result.bits_per_sample <= result.initial_bits_per_sample + 1e-12


def test_fit_errors():
    with pytest.raises(DomainError):
        fit(Histogram(np.zeros(4, dtype=np.int64), 2), 1)
    with pytest.raises(DomainError):
        fit(Histogram(np.ones(4, dtype=np.int64), 2), 0)


def test_cyclic_shift():
    img = Image(np.array([[[0], [100], [200], [255]]], dtype=np.uint16), 8)
    assert cyclic_shift(img).pixels.ravel().tolist() == [128, 228, 72, 127]
    assert cyclic_shift(cyclic_shift(img)) == img
