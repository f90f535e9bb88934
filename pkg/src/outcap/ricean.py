"""Ricean block-fading channel with pilot-based ML estimation.

Variance convention: ``CN(m, v)`` has total complex variance ``v`` (each real
component ``v / 2``), so the Rice factor is ``|mu_h|**2 / var_h``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc, gammaln
from scipy.stats import norm

from ._validation import check_gamma, check_positive

__all__ = [
    "RiceanChannel",
    "TrainingConfig",
    "StatePosterior",
    "sample_state",
    "ml_estimate",
    "posterior_of",
    "marcum_q1",
    "rician_cdf",
    "gamma_percentile",
    "PercentileTable",
    "percentile_table",
    "amplitude_grid",
    "outage_capacity_closed_form",
    "ergodic_capacity_perfect_csi",
]

# Poisson weights below this are dropped from the Marcum series
_PMF_CUTOFF = 1e-18


@dataclass(frozen=True)
class RiceanChannel:
    """theta ~ CN(mu_h, var_h) observed in AWGN of variance noise_var."""

    mu_h: complex
    var_h: float
    noise_var: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu_h", complex(self.mu_h))
        check_positive(self.var_h, "var_h")
        check_positive(self.noise_var, "noise_var")

    @classmethod
    def from_rice_factor_db(cls, k_db, mu_h=1.0, noise_var=1.0):
        k = 10.0 ** (k_db / 10.0)
        return cls(mu_h=mu_h, var_h=abs(mu_h) ** 2 / k, noise_var=noise_var)

    @property
    def rice_factor(self):
        return abs(self.mu_h) ** 2 / self.var_h

    @property
    def rice_factor_db(self):
        return 10.0 * np.log10(self.rice_factor)


@dataclass(frozen=True)
class TrainingConfig:
    n_train: int
    p_train: float

    def __post_init__(self):
        if int(self.n_train) != self.n_train or self.n_train < 1:
            raise ValueError(f"n_train must be a positive integer, got {self.n_train!r}")
        check_positive(self.p_train, "p_train")

    def estimation_noise_var(self, noise_var):
        """Variance of the pilot-correlator error, noise_var / (N * P_T)."""
        return noise_var / (self.n_train * self.p_train)


@dataclass(frozen=True)
class StatePosterior:
    """CN(mean, var) law of the state given its estimate; rho is the shrinkage."""

    mean: complex
    var: float
    rho: float = field(default=np.nan)

    @property
    def scale(self):
        """Per-component standard deviation of the posterior."""
        return np.sqrt(self.var / 2.0)


def _cn(rng, var, size):
    return np.sqrt(var / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_state(channel, rng, size=None):
    """Draw theta = mu_h + g with g ~ CN(0, var_h)."""
    return channel.mu_h + _cn(rng, channel.var_h, size)


def ml_estimate(theta, training, channel, rng):
    """Pilot-correlator estimate theta + w with w ~ CN(0, noise_var / (N P_T))."""
    var_w = training.estimation_noise_var(channel.noise_var)
    theta = np.asarray(theta)
    out = theta + _cn(rng, var_w, theta.shape)
    return complex(out) if out.ndim == 0 else out


def posterior_of(theta_hat, channel, training):
    """Gaussian posterior of theta given the estimate.

    mean = rho * theta_hat + (1 - rho) * mu_h and var = rho * var_w with
    rho = var_h / (var_w + var_h).  Array input gives array fields.
    """
    var_w = training.estimation_noise_var(channel.noise_var)
    rho = channel.var_h / (var_w + channel.var_h)
    mean = rho * np.asarray(theta_hat) + (1.0 - rho) * channel.mu_h
    if mean.ndim == 0:
        mean = complex(mean)
    return StatePosterior(mean=mean, var=rho * var_w, rho=rho)


def _poisson_window(lam):
    """Indices k carrying Poisson(lam) mass above the cutoff, and their pmf."""
    if lam == 0.0:
        return np.zeros(1, dtype=int), np.ones(1)
    spread = 10.0 * np.sqrt(lam) + 12.0
    k = np.arange(max(0, int(lam - spread)), int(lam + spread) + 1)
    pmf = np.exp(k * np.log(lam) - lam - gammaln(k + 1))
    keep = pmf >= _PMF_CUTOFF
    keep[np.argmax(pmf)] = True
    pmf = pmf[keep]
    # the window holds all but ~1e-16 of the mass; renormalizing cancels the
    # ~1e-14 relative error of the log-space pmf at large lam
    return k[keep], pmf / math.fsum(pmf)


def _marcum_pair(a, b):
    """(Q1(a, b), 1 - Q1(a, b)), each summed directly to avoid cancellation.

    Poisson mixture form: the Rician square r**2 / 2 is Gamma(K + 1) with
    K ~ Poisson(a**2 / 2), hence
    Q1(a, b) = sum_k Pois(k; a**2/2) * Qgamma(k + 1, b**2 / 2).
    """
    if b == 0.0:
        return 1.0, 0.0
    k, pmf = _poisson_window(0.5 * a * a)
    x = 0.5 * b * b
    upper = float(np.sum(pmf * gammaincc(k + 1, x)))
    lower = float(np.sum(pmf * gammainc(k + 1, x)))
    return min(upper, 1.0), min(lower, 1.0)


def marcum_q1(a, b):
    """First-order Marcum Q function, the Rician upper tail Pr(R > b).

    Accepts scalars or broadcastable arrays.  Absolute error is below 1e-12.
    """
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise ValueError("marcum_q1 requires a, b >= 0")
    out = np.empty(a_arr.shape)
    for idx in np.ndindex(a_arr.shape):
        out[idx] = _marcum_pair(float(a_arr[idx]), float(b_arr[idx]))[0]
    return float(out) if out.ndim == 0 else out


def rician_cdf(r, nu, s):
    """Pr(|theta| <= r) for |theta| Rician with noncentrality nu, component scale s."""
    if r <= 0:
        return 0.0
    return _marcum_pair(nu / s, r / s)[1]


def _unit_percentile(a, gamma):
    """t with Pr(R <= t) = gamma for R Rician(a, 1)."""
    f = lambda t: _marcum_pair(a, t)[1] - gamma
    hi = a + 4.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def gamma_percentile(posterior, gamma):
    """gamma-percentile r* of |theta| under the posterior.

    |theta| is Rician with noncentrality |mean| and component scale
    sqrt(var / 2).  The root of F(r*) = gamma is found by bracketed Brent
    iteration to machine precision.
    """
    gamma = check_gamma(gamma, closed_low=False)
    if not posterior.var > 0:
        raise ValueError("posterior variance must be positive")
    s = posterior.scale
    return s * _unit_percentile(abs(posterior.mean) / s, gamma)


class PercentileTable:
    """Vectorized gamma-percentile for a fixed gamma.

    The unit-scale percentile t(a) depends on the single ratio a = nu / s.
    It is tabulated exactly on a uniform grid in u = a / (1 + a) and
    interpolated with a cubic spline in (u, t - a).  At u = 1 the value is the
    Gaussian limit norm.ppf(gamma).
    """

    def __init__(self, gamma, n_nodes=1025):
        self.gamma = check_gamma(gamma, closed_low=False)
        u = np.linspace(0.0, 1.0, n_nodes)
        a = u[:-1] / (1.0 - u[:-1])
        offsets = [_unit_percentile(ai, self.gamma) - ai for ai in a]
        offsets.append(norm.ppf(self.gamma))
        self._spline = CubicSpline(u, offsets)

    def unit(self, a):
        a = np.asarray(a, dtype=float)
        return np.maximum(self._spline(a / (1.0 + a)) + a, 0.0)

    def __call__(self, nu, s):
        """Percentile for noncentrality `nu` and component scale `s` (arrays)."""
        s = np.asarray(s, dtype=float)
        return s * self.unit(np.asarray(nu, dtype=float) / s)


@lru_cache(maxsize=16)
def percentile_table(gamma):
    return PercentileTable(gamma)


def amplitude_grid(posterior, n_atoms=2000, span=10.0):
    """Discretize the law of |theta| under `posterior` onto equal-width bins.

    Bins cover ``|mean| -+ span * scale`` (clipped at zero); atoms sit at bin
    midpoints and carry the exact bin probabilities, renormalized.

    Returns
    -------
    atoms, weights : ndarray
    """
    nu, s = abs(posterior.mean), posterior.scale
    edges = np.linspace(max(0.0, nu - span * s), nu + span * s, int(n_atoms) + 1)
    cdf = np.array([rician_cdf(e, nu, s) for e in edges])
    weights = np.maximum(np.diff(cdf), 0.0)
    return 0.5 * (edges[1:] + edges[:-1]), weights / weights.sum()


def outage_capacity_closed_form(r_star, tx_power, noise_var):
    """log2(1 + r*^2 P / noise_var) in bits."""
    r_star = np.asarray(r_star, dtype=float)
    tx_power = np.asarray(tx_power, dtype=float)
    if np.any(r_star < 0) or np.any(tx_power < 0):
        raise ValueError("r_star and tx_power must be nonnegative")
    check_positive(noise_var, "noise_var")
    out = np.log2(1.0 + r_star**2 * tx_power / noise_var)
    return float(out) if out.ndim == 0 else out


def ergodic_capacity_perfect_csi(channel, power_policy, tx_power_avg, n_samples, rng):
    """Monte Carlo ergodic capacity with perfect CSI.

    `power_policy` is "constant" or "waterfilling"; water-filling is solved on
    the empirical gain distribution of the drawn samples.

    Returns
    -------
    (mean, std_error) in bits
    """
    from .power import GainDistribution, waterfill

    theta = sample_state(channel, rng, int(n_samples))
    gains = np.abs(theta) ** 2 / channel.noise_var
    if power_policy == "constant":
        power = np.full(gains.shape, float(tx_power_avg))
    elif power_policy == "waterfilling":
        dist = GainDistribution(gains, np.full(gains.size, 1.0 / gains.size))
        power = waterfill(dist, tx_power_avg).allocations
    else:
        raise ValueError(f"unknown power policy {power_policy!r}")
    caps = np.log2(1.0 + gains * power)
    std_error = caps.std(ddof=1) / np.sqrt(caps.size) if caps.size > 1 else 0.0
    return float(caps.mean()), float(std_error)
