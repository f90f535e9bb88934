"""Input validation helpers shared across modules."""

import numpy as np

PROB_ATOL = 1e-9


def check_probability_vector(p, name="probs", atol=PROB_ATOL):
    """Return `p` as a float array after checking it lies on the simplex.

    Entries within `atol` of summing to one are renormalized exactly.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    total = p.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, expected 1")
    return p / total


def check_stochastic_matrix(w, name="matrix", atol=PROB_ATOL):
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-d array, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(w < 0):
        raise ValueError(f"{name} has negative entries")
    sums = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
    if bad.size:
        raise ValueError(f"{name} row {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
    return w / sums[:, None]


def check_gamma(gamma, *, closed_low=True):
    """Outage probability must lie in [0, 1) or, with closed_low=False, (0, 1)."""
    gamma = float(gamma)
    ok = (0.0 <= gamma < 1.0) if closed_low else (0.0 < gamma < 1.0)
    if not ok:
        interval = "[0, 1)" if closed_low else "(0, 1)"
        raise ValueError(f"gamma must lie in {interval}, got {gamma!r}")
    return gamma


def check_positive(value, name):
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
