"""Discretized mixtures of logistic distributions over ``{0, ..., 2^b - 1}``.

The mass of value ``x`` is the logistic-CDF increment over ``[x - 0.5, x + 0.5]``
summed over components, with the two outermost bins widened to absorb the
tails so the distribution normalises exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, log_softmax, logit, softmax

from .errors import DomainError, FormatError
from .image import Image
from .stats import Histogram

SCALE_FLOOR = 1e-3
LOG_FLOOR = np.log(1e-12)


@dataclass(frozen=True)
class LogisticMixtureParams:
    weights: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    bit_depth: int

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_1d(np.asarray(self.means, dtype=np.float64))
        s = np.atleast_1d(np.asarray(self.scales, dtype=np.float64))
        if not (w.shape == mu.shape == s.shape) or w.ndim != 1 or w.size < 1:
            raise DomainError("weights, means and scales must be equal-length 1-d arrays")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights must form a simplex (sum {w.sum()!r})")
        if np.any(s < SCALE_FLOOR * (1 - 1e-9)) or not np.all(np.isfinite(mu)):
            raise DomainError(f"scales must be >= {SCALE_FLOOR} and means finite")
        if not 1 <= self.bit_depth <= 16:
            raise DomainError(f"bit depth must be in [1, 16], got {self.bit_depth}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "scales", s)

    @property
    def num_components(self) -> int:
        return self.weights.size

    @property
    def support(self) -> int:
        return 1 << self.bit_depth

    @classmethod
    def single(cls, mean, scale, bit_depth) -> LogisticMixtureParams:
        return cls([1.0], [mean], [scale], bit_depth)

    def to_bytes(self) -> bytes:
        """``u16 M`` followed by M weights, M means and M scales as little-endian float64."""
        m = self.num_components
        return struct.pack(f"<H{3 * m}d", m, *self.weights, *self.means, *self.scales)

    @classmethod
    def from_bytes(cls, data, bit_depth: int, offset: int = 0) -> tuple[LogisticMixtureParams, int]:
        try:
            (m,) = struct.unpack_from("<H", data, offset)
            vals = struct.unpack_from(f"<{3 * m}d", data, offset + 2)
        except struct.error as exc:
            raise FormatError(f"truncated mixture record: {exc}") from None
        w, mu, s = (np.array(vals[i * m:(i + 1) * m]) for i in range(3))
        try:
            params = cls(w, mu, s, bit_depth)
        except DomainError as exc:
            raise FormatError(f"invalid mixture record: {exc}") from None
        return params, offset + 2 + 24 * m


def _std_edges(params, x):
    """Standardised lower/upper bin edges, shape (M, len(x)), with infinite outer edges."""
    x = np.asarray(x, dtype=np.float64)
    lo = x - 0.5
    hi = x + 0.5
    lo = np.where(x <= 0, -np.inf, lo)
    hi = np.where(x >= params.support - 1, np.inf, hi)
    mu = params.means[:, None]
    s = params.scales[:, None]
    return (lo[None, :] - mu) / s, (hi[None, :] - mu) / s


def _bin_mass(a, b):
    # difference of sigmoids, evaluated on whichever side avoids cancellation
    upper = a > 0
    return np.where(upper, expit(-a) - expit(-b), expit(b) - expit(a))


def component_pmf(params: LogisticMixtureParams, x) -> np.ndarray:
    """Per-component masses ``q_i(x)``, shape ``(M, len(x))``."""
    a, b = _std_edges(params, x)
    return _bin_mass(a, b)


def _check_values(params, x):
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x >= params.support) or np.any(x != np.floor(x)):
        raise DomainError(f"values must be integers in [0, {params.support - 1}]")
    return x


def pmf(params: LogisticMixtureParams, x):
    """Probability of each value in ``x`` (scalar in, scalar out)."""
    scalar = np.isscalar(x)
    x = _check_values(params, np.atleast_1d(x))
    p = params.weights @ component_pmf(params, x)
    return float(p[0]) if scalar else p


def pmf_table(params: LogisticMixtureParams) -> np.ndarray:
    return params.weights @ component_pmf(params, np.arange(params.support))


def binned_pmf(params: LogisticMixtureParams, bin_bits: int) -> np.ndarray:
    """Mass of each run of ``2**bin_bits`` consecutive values (the high-part distribution)."""
    if bin_bits == 0:
        return pmf_table(params)
    width = 1 << bin_bits
    starts = np.arange(0, params.support, width, dtype=np.float64)
    lo = np.where(starts <= 0, -np.inf, starts - 0.5)
    hi = np.where(starts + width >= params.support, np.inf, starts + width - 0.5)
    mu = params.means[:, None]
    s = params.scales[:, None]
    return params.weights @ _bin_mass((lo - mu) / s, (hi - mu) / s)


def log_likelihood(params: LogisticMixtureParams, hist: Histogram) -> tuple[float, float]:
    """Total log-likelihood in nats and the matching bits per sample."""
    if hist.bit_depth != params.bit_depth:
        raise DomainError("histogram and parameters disagree on bit depth")
    n = hist.total
    if n == 0:
        raise DomainError("log-likelihood of an empty histogram")
    x = np.flatnonzero(hist.counts)
    logp = np.maximum(np.log(np.maximum(params.weights @ component_pmf(params, x), 0.0) + 1e-300), LOG_FLOOR)
    ll = float(hist.counts[x] @ logp)
    return ll, -ll / (n * np.log(2))


# -- unconstrained parameterisation: theta = [logits (M), means (M), log scales (M)]

def pack(params: LogisticMixtureParams) -> np.ndarray:
    return np.concatenate([np.log(np.maximum(params.weights, 1e-300)), params.means, np.log(params.scales)])


def unpack(theta, bit_depth: int) -> LogisticMixtureParams:
    m = len(theta) // 3
    w = softmax(theta[:m])
    w = w / w.sum()
    return LogisticMixtureParams(w, theta[m:2 * m], np.maximum(np.exp(theta[2 * m:]), SCALE_FLOOR), bit_depth)


def _sig_prime(z):
    return expit(z) * expit(-z)


def loglik_and_grad(theta: np.ndarray, x: np.ndarray, counts: np.ndarray, bit_depth: int):
    """Log-likelihood (nats) of ``counts`` at values ``x`` and its gradient in ``theta``."""
    m = len(theta) // 3
    logw = log_softmax(theta[:m])
    w = np.exp(logw)
    mu = theta[m:2 * m, None]
    s = np.exp(theta[2 * m:])[:, None]
    xf = x.astype(np.float64)
    lo = np.where(xf <= 0, -np.inf, xf - 0.5)
    hi = np.where(xf >= (1 << bit_depth) - 1, np.inf, xf + 0.5)
    a = (lo[None, :] - mu) / s
    b = (hi[None, :] - mu) / s
    q = _bin_mass(a, b)
    p = w @ q
    ok = p > np.exp(LOG_FLOOR)
    logp = np.where(ok, np.log(np.where(ok, p, 1.0)), LOG_FLOOR)
    ll = float(counts @ logp)
    coef = np.where(ok, counts / np.where(ok, p, 1.0), 0.0)

    da = _sig_prime(a)
    db = _sig_prime(b)
    a_term = np.where(np.isfinite(a), da * np.where(np.isfinite(a), a, 0.0), 0.0)
    b_term = np.where(np.isfinite(b), db * np.where(np.isfinite(b), b, 0.0), 0.0)
    dq_dmu = -(db - da) / s
    dq_dlogs = -(b_term - a_term)

    g_logits = w * (q @ coef) - w * (p @ coef)
    g_mu = w * (dq_dmu @ coef)
    g_logs = w * (dq_dlogs @ coef)
    return ll, np.concatenate([g_logits, g_mu, g_logs])


def sample(params: LogisticMixtureParams, rng: np.random.Generator, size=None):
    """Draw values by picking a component, sampling it and rounding to the grid."""
    n = 1 if size is None else int(np.prod(size))
    comp = rng.choice(params.num_components, size=n, p=params.weights)
    u = rng.random(n)
    u = np.clip(u, 1e-300, 1 - 1e-16)
    xc = params.means[comp] + params.scales[comp] * logit(u)
    x = np.clip(np.rint(xc), 0, params.support - 1).astype(np.int64)
    return int(x[0]) if size is None else x.reshape(size)


@dataclass
class FitConfig:
    restarts: int = 10
    max_iter: int = 500
    tol: float = 1e-10
    seed: int = 0


@dataclass
class FitResult:
    params: LogisticMixtureParams
    bits_per_sample: float
    initial_bits_per_sample: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def initial_params(hist: Histogram, m: int) -> LogisticMixtureParams:
    """Means at evenly spaced histogram quantiles, scales a quarter of the support per component."""
    cdf = np.cumsum(hist.counts) / hist.total
    qs = (np.arange(m) + 0.5) / m
    means = np.searchsorted(cdf, qs).astype(np.float64)
    scale = max((1 << hist.bit_depth) / (4.0 * m), SCALE_FLOOR)
    return LogisticMixtureParams(np.full(m, 1.0 / m), means, np.full(m, scale), hist.bit_depth)


def _random_params(hist, m, rng):
    k = 1 << hist.bit_depth
    p = hist.counts / hist.total
    means = rng.choice(k, size=m, p=p) + rng.normal(0.0, 1.0, size=m)
    scales = np.exp(rng.uniform(np.log(0.5), np.log(max(k / m, 1.0)), size=m))
    w = rng.dirichlet(np.ones(m))
    w = np.maximum(w, 1e-6)
    return LogisticMixtureParams(w / w.sum(), means, np.maximum(scales, SCALE_FLOOR), hist.bit_depth)


def fit(hist: Histogram, m: int, config: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood mixture for ``hist`` by bounded quasi-Newton ascent with restarts.

    The first start is :func:`initial_params`; further starts are drawn from a
    seeded generator.  The best local optimum is returned, never one worse
    than the first start.
    """
    config = config or FitConfig()
    n = hist.total
    if n == 0:
        raise DomainError("cannot fit an empty histogram")
    if m < 1:
        raise DomainError(f"component count must be >= 1, got {m}")
    k = 1 << hist.bit_depth
    x = np.flatnonzero(hist.counts)
    counts = hist.counts[x].astype(np.float64)
    scale = 1.0 / (n * np.log(2))

    def objective(theta):
        ll, g = loglik_and_grad(theta, x, counts, hist.bit_depth)
        return -ll * scale, -g * scale

    bounds = (
        [(-30.0, 30.0)] * m
        + [(-0.5 * k, 1.5 * k)] * m
        + [(np.log(SCALE_FLOOR), np.log(4.0 * k))] * m
    )
    rng = np.random.default_rng(config.seed)
    init = initial_params(hist, m)
    init_bits = log_likelihood(init, hist)[1]
    best_theta, best_bits, converged = pack(init), init_bits, False
    history = []
    for r in range(max(config.restarts, 1)):
        start = init if r == 0 else _random_params(hist, m, rng)
        theta0 = np.clip(pack(start), [b[0] for b in bounds], [b[1] for b in bounds])
        res = optimize.minimize(
            objective, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": config.max_iter, "ftol": config.tol, "gtol": 1e-9},
        )
        history.append(float(res.fun))
        if res.fun < best_bits:
            best_theta, best_bits, converged = res.x, float(res.fun), bool(res.success)
        elif r == 0:
            converged = bool(res.success)
    params = unpack(best_theta, hist.bit_depth)
    return FitResult(params, log_likelihood(params, hist)[1], init_bits, converged, history)


def default_shift(bit_depth: int) -> int:
    return 1 << (bit_depth - 1)


def cyclic_shift(img: Image, amount: int | None = None) -> Image:
    """Add ``amount`` (default ``2**(b-1)``) to every sample modulo ``2**b``."""
    if amount is None:
        amount = default_shift(img.bit_depth)
    mask = (1 << img.bit_depth) - 1
    shifted = (img.pixels.astype(np.int64) + amount) & mask
    return Image(shifted, img.bit_depth)


# -- cross-channel coupling: the mean of channel c shifts linearly with the
#    already-known values of channels 0..c-1.

@dataclass(frozen=True)
class CoupledMixture:
    """One mixture per channel plus per-channel linear coefficients on earlier channels."""

    channels: list[LogisticMixtureParams]
    coupling: list[np.ndarray]

    def shifted(self, c: int, earlier) -> LogisticMixtureParams:
        p = self.channels[c]
        offset = float(np.dot(self.coupling[c], earlier)) if c else 0.0
        return LogisticMixtureParams(p.weights, p.means + offset, p.scales, p.bit_depth)

    def log_prob(self, pixel) -> float:
        total = 0.0
        for c in range(len(self.channels)):
            total += np.log(max(pmf(self.shifted(c, pixel[:c]), int(pixel[c])), np.exp(LOG_FLOOR)))
        return total


def _coupled_objective(theta, x, earlier, counts, m, bit_depth):
    """Mixture with an extra linear mean term ``alpha . earlier`` per sample."""
    j = earlier.shape[1]
    alpha = theta[3 * m:]
    offset = earlier @ alpha
    logw = log_softmax(theta[:m])
    w = np.exp(logw)
    mu = theta[m:2 * m, None] + offset[None, :]
    s = np.exp(theta[2 * m:3 * m])[:, None]
    xf = x.astype(np.float64)
    lo = np.where(xf <= 0, -np.inf, xf - 0.5)
    hi = np.where(xf >= (1 << bit_depth) - 1, np.inf, xf + 0.5)
    a = (lo[None, :] - mu) / s
    b = (hi[None, :] - mu) / s
    q = _bin_mass(a, b)
    p = w @ q
    ok = p > np.exp(LOG_FLOOR)
    ll = float(counts @ np.where(ok, np.log(np.where(ok, p, 1.0)), LOG_FLOOR))
    coef = np.where(ok, counts / np.where(ok, p, 1.0), 0.0)
    da = _sig_prime(a)
    db = _sig_prime(b)
    a_term = np.where(np.isfinite(a), da * np.where(np.isfinite(a), a, 0.0), 0.0)
    b_term = np.where(np.isfinite(b), db * np.where(np.isfinite(b), b, 0.0), 0.0)
    dq_dmu = -(db - da) / s
    g_logits = w * (q @ coef) - w * (p @ coef)
    g_mu = w * (dq_dmu @ coef)
    g_logs = w * (-(b_term - a_term) @ coef)
    # d p / d offset = sum_i w_i dq_i/dmu_i, per sample
    dp_doff = w @ dq_dmu
    g_alpha = earlier.T @ (coef * dp_doff) if j else np.zeros(0)
    return ll, np.concatenate([g_logits, g_mu, g_logs, g_alpha])


def fit_coupled(pixels: np.ndarray, bit_depth: int, m: int, config: FitConfig | None = None) -> CoupledMixture:
    """Fit per-channel mixtures jointly with linear dependence on earlier channels.

    ``pixels`` is an ``(N, C)`` integer array.  Channel 0 is a plain mixture;
    channel ``c`` adds ``alpha_c . pixel[:c]`` to every component mean.  With a
    single channel this reduces to :func:`fit`.
    """
    config = config or FitConfig(restarts=1)
    pixels = np.asarray(pixels, dtype=np.int64)
    if pixels.ndim != 2 or pixels.shape[0] == 0:
        raise DomainError("expected a non-empty (N, C) array")
    k = 1 << bit_depth
    channels = []
    coupling = []
    for c in range(pixels.shape[1]):
        base = fit(Histogram.of(pixels[:, c], bit_depth), m, config)
        if c == 0:
            channels.append(base.params)
            coupling.append(np.zeros(0))
            continue
        rows, counts = np.unique(pixels[:, : c + 1], axis=0, return_counts=True)
        x = rows[:, c]
        earlier = rows[:, :c].astype(np.float64)
        centre = earlier.mean(axis=0)
        # start from the uncoupled fit, with means re-centred on the coupling offset
        p0 = base.params
        theta0 = np.concatenate([np.log(p0.weights), p0.means, np.log(p0.scales), np.zeros(c)])
        scale = 1.0 / (counts.sum() * np.log(2))

        def objective(theta, x=x, earlier=earlier - centre, counts=counts.astype(np.float64)):
            ll, g = _coupled_objective(theta, x, earlier, counts, m, bit_depth)
            return -ll * scale, -g * scale

        bounds = (
            [(-30.0, 30.0)] * m
            + [(-0.5 * k - 2 * k * c, 1.5 * k + 2 * k * c)] * m
            + [(np.log(SCALE_FLOOR), np.log(4.0 * k))] * m
            + [(-2.0, 2.0)] * c
        )
        res = optimize.minimize(objective, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": config.max_iter, "ftol": config.tol})
        theta = res.x
        alpha = theta[3 * m:]
        params = unpack(theta[:3 * m], bit_depth)
        # fold the centring back into the means
        params = LogisticMixtureParams(params.weights, params.means - float(alpha @ centre), params.scales, bit_depth)
        channels.append(params)
        coupling.append(alpha)
    return CoupledMixture(channels, coupling)
