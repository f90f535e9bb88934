"""Lloyd-Max scalar quantization for the rate-limited feedback link."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = ["LloydMaxQuantizer", "Quantizer", "lloyd_max_train", "encode", "decode"]


def _as_samples(X):
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d sample or a single column, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    return x


class LloydMaxQuantizer(TransformerMixin, BaseEstimator):
    """Scalar quantizer trained by alternating nearest-neighbour and centroid steps.

    Parameters
    ----------
    n_levels : int
        Number of reproduction levels, 2**R_FB for R_FB feedback bits.
    max_iter : int
    tol : float
        Stop when the relative distortion decrease falls below `tol`.

    Attributes
    ----------
    levels_ : ndarray of shape (n_levels,)
        Ascending reproduction values.
    boundaries_ : ndarray of shape (n_levels - 1,)
        Midpoints between adjacent levels.
    distortion_ : float
        Mean squared error on the training sample.
    distortion_history_ : list of float
        Distortion after every nearest-neighbour partition.
    n_iter_ : int
    """

    def __init__(self, n_levels=2, max_iter=1000, tol=1e-10):
        self.n_levels = n_levels
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        x = np.sort(_as_samples(X))
        n_levels = int(self.n_levels)
        if n_levels < 1:
            raise ValueError("n_levels must be at least 1")
        if np.unique(x).size < n_levels:
            raise ValueError(
                f"need at least {n_levels} distinct samples, got {np.unique(x).size}"
            )
        # seed levels at the empirical quantiles of the cell midpoints
        levels = np.quantile(x, (np.arange(n_levels) + 0.5) / n_levels)
        levels = self._split_to(x, levels, n_levels)

        history = []
        for it in range(1, int(self.max_iter) + 1):
            bounds = 0.5 * (levels[1:] + levels[:-1])
            edges = np.concatenate(([0], np.searchsorted(x, bounds, side="right"), [x.size]))
            counts = np.diff(edges)
            if np.any(counts == 0):
                # empty cell: drop its level and split the largest cell
                levels = self._split_to(x, levels[counts > 0], n_levels)
                continue
            idx = np.repeat(np.arange(n_levels), counts)
            history.append(float(np.mean((x - levels[idx]) ** 2)))
            sums = np.add.reduceat(x, edges[:-1])
            levels = np.sort(sums / counts)
            if len(history) > 1:
                prev, cur = history[-2], history[-1]
                if prev - cur <= self.tol * max(prev, np.finfo(float).tiny):
                    break
        self.n_iter_ = it
        self.levels_ = levels
        self.boundaries_ = 0.5 * (levels[1:] + levels[:-1])
        self.distortion_ = float(np.mean((x - levels[self._encode(x)]) ** 2))
        history.append(self.distortion_)
        self.distortion_history_ = history
        return self

    @staticmethod
    def _split_to(x, live, target):
        """Grow `live` to `target` distinct levels by splitting populous cells.

        The most populous cell holding two or more distinct values is cut at
        its median and both halves take their centroids, which cannot
        increase distortion.
        """
        live = np.unique(live)
        while live.size < target:
            bounds = 0.5 * (live[1:] + live[:-1])
            edges = np.concatenate(([0], np.searchsorted(x, bounds, side="right"), [x.size]))
            for j in np.argsort(-np.diff(edges), kind="stable"):
                cell = x[edges[j]: edges[j + 1]]
                if cell.size and cell[0] != cell[-1]:
                    break
            cut = int(np.searchsorted(cell, np.median(cell), side="right"))
            if cut >= cell.size:
                cut = int(np.searchsorted(cell, cell[-1], side="left"))
            halves = [cell[:cut].mean(), cell[cut:].mean()]
            live = np.unique(np.concatenate([np.delete(live, j), halves]))
        return live

    def _encode(self, x):
        return np.searchsorted(self.boundaries_, x, side="left")

    def transform(self, X):
        """Cell index of each sample; a value on a boundary goes to the lower cell."""
        check_is_fitted(self, "levels_")
        return self._encode(_as_samples(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "levels_")
        idx = np.asarray(X)
        if idx.size and (np.any(idx < 0) or np.any(idx >= self.levels_.size)):
            raise IndexError(f"cell index out of range 0..{self.levels_.size - 1}")
        return self.levels_[idx.astype(int)]

    def quantize(self, X):
        return self.inverse_transform(self.transform(X))

    @property
    def n_cells(self):
        return self.levels_.size


Quantizer = LloydMaxQuantizer


def lloyd_max_train(samples, levels, max_iters=1000, tol=1e-10):
    """Train a Lloyd-Max quantizer with `levels` reproduction values."""
    return LloydMaxQuantizer(n_levels=levels, max_iter=max_iters, tol=tol).fit(samples)


def encode(q, x):
    out = q.transform(np.atleast_1d(x))
    return int(out[0]) if np.ndim(x) == 0 else out


def decode(q, index):
    if np.ndim(index) == 0:
        if not 0 <= int(index) < q.n_cells:
            raise IndexError(f"cell index {index} out of range 0..{q.n_cells - 1}")
        return float(q.levels_[int(index)])
    return q.inverse_transform(index)
