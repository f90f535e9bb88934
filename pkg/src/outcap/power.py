"""Water-filling power allocation under an average power budget."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_probability_vector

__all__ = ["GainDistribution", "PowerPolicy", "WaterFilling", "waterfill", "policy_value"]


@dataclass(frozen=True)
class GainDistribution:
    """Discrete law of the effective gain g = r*^2 / noise_var."""

    gains: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gains must be a nonempty 1-d array")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite and nonnegative")
        w = check_probability_vector(self.weights, "weights", atol=1e-9)
        if w.size != g.size:
            raise ValueError(f"{g.size} gains but {w.size} weights")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class PowerPolicy:
    allocations: np.ndarray
    multiplier: float

    @property
    def water_level(self):
        return self.multiplier


def _allocate(gains, level):
    pos = gains > 0
    inv = np.divide(1.0, gains, out=np.full(gains.shape, np.inf), where=pos)
    return np.maximum(level - inv, 0.0)


def _water_level(gains, weights, p_avg, rtol=1e-12):
    """Solve sum_i w_i max(0, mu - 1/g_i) = p_avg for mu.

    Bisection on the monotone left-hand side, then the closed form on the
    active set it identifies, which removes the bisection residual.
    """
    pos = gains > 0
    if not np.any(pos & (weights > 0)):
        raise ValueError("water-filling needs at least one positive gain with positive weight")
    inv = 1.0 / gains[pos]
    w = weights[pos]

    def spent(mu):
        return w @ np.maximum(mu - inv, 0.0)

    lo = 0.0
    hi = p_avg / w[w > 0].sum() + inv[w > 0].min()
    while spent(hi) < p_avg:
        hi *= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if spent(mid) < p_avg:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    active = (inv < mu) & (w > 0)
    if active.any():
        exact = (p_avg + w[active] @ inv[active]) / w[active].sum()
        # accept only if it leaves the active set unchanged
        if np.array_equal((inv < exact) & (w > 0), active):
            mu = exact
    return float(mu)


class WaterFilling(BaseEstimator):
    """Water-filling fitted on a sample (or weighted atoms) of channel gains.

    Parameters
    ----------
    p_avg : float
        Average power budget.

    Attributes
    ----------
    water_level_ : float
        The level mu; a gain g receives max(0, mu - 1/g).
    """

    def __init__(self, p_avg=1.0):
        self.p_avg = p_avg

    def fit(self, X, y=None, sample_weight=None):
        gains = np.asarray(X, dtype=float).ravel()
        if sample_weight is None:
            weights = np.full(gains.size, 1.0 / gains.size)
        else:
            weights = np.asarray(sample_weight, dtype=float)
            weights = weights / weights.sum()
        dist = GainDistribution(gains, weights)
        p_avg = check_positive(self.p_avg, "p_avg")
        self.water_level_ = _water_level(dist.gains, dist.weights, p_avg)
        return self

    def predict(self, X):
        check_is_fitted(self, "water_level_")
        return _allocate(np.asarray(X, dtype=float), self.water_level_)

    def score(self, X, y=None, sample_weight=None):
        """Average rate sum_i w_i log2(1 + g_i p_i) of the fitted policy."""
        gains = np.asarray(X, dtype=float).ravel()
        rates = np.log2(1.0 + gains * self.predict(gains))
        return float(np.average(rates, weights=sample_weight))


def waterfill(dist, p_avg):
    """Optimal allocation maximizing sum_i w_i log2(1 + g_i p_i) s.t. sum_i w_i p_i <= p_avg."""
    model = WaterFilling(p_avg=p_avg).fit(dist.gains, sample_weight=dist.weights)
    return PowerPolicy(model.predict(dist.gains), model.water_level_)


def policy_value(dist, policy):
    p = np.asarray(getattr(policy, "allocations", policy), dtype=float)
    if p.shape != dist.gains.shape:
        raise ValueError(f"{p.size} allocations for {dist.gains.size} atoms")
    return float(dist.weights @ np.log2(1.0 + dist.gains * p))
