import numpy as np
import pytest


def h2(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.where((p == 0) | (p == 1), 0.0, out)


def grid_search_max_min(channels, resolution=10_000):
    """max over binary P of min_k I(P, W_k), P on a uniform grid."""
    q = np.linspace(0.0, 1.0, resolution + 1)
    pts = np.stack([q, 1 - q], axis=1)
    worst = np.full(q.size, np.inf)
    for w in channels:
        w = np.asarray(w, dtype=float)
        out = pts @ w
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.where(w > 0, w * np.log2(w), 0.0).sum(axis=1)
            h_out = np.where(out > 0, -out * np.log2(out), 0.0).sum(axis=1)
        worst = np.minimum(worst, h_out + pts @ cond)
    return float(worst.max())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
