"""Estimation-induced outage capacity over a discretized state posterior.

Given posterior weights over finitely many channel states, the outage
capacity at outage probability ``gamma`` is

    max_P  max_{L : Pr(L) >= 1 - gamma}  min_{i in L}  I(P, W_i).

For fixed per-state values the inner max-min is solved exactly by dropping
the lowest-valued states while their cumulative weight stays within gamma.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ._validation import check_gamma, check_probability_vector
from .dmc import (
    ConvergenceError,
    Dmc,
    InputDistribution,
    capacity_cost,
    channel_capacity,
    compound_capacity,
    mutual_information,
)

__all__ = [
    "PosteriorGrid",
    "ConfidenceSet",
    "OutageResult",
    "confidence_set_for_values",
    "outage_value_fixed_input",
    "estimation_induced_outage_capacity",
    "brute_force_outage",
]

MAX_OUTER_ROUNDS = 50
MAX_BRUTE_FORCE_ATOMS = 15
MAX_SIMPLEX_POINTS = 2_000_000


@dataclass(frozen=True)
class PosteriorGrid:
    """Discrete posterior over channel states.

    Exactly one of `channels` (per-atom DMCs) or `values` (per-atom scalar
    rates in bits, for models whose rate does not depend on a free input
    distribution) is set.
    """

    weights: np.ndarray
    atoms: Optional[Sequence] = None
    channels: Optional[Sequence[Dmc]] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        w = check_probability_vector(self.weights, "weights", atol=1e-9)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        n = w.size
        atoms = list(range(n)) if self.atoms is None else list(self.atoms)
        if len(atoms) != n:
            raise ValueError(f"{len(atoms)} atom labels for {n} weights")
        object.__setattr__(self, "atoms", tuple(atoms))
        if (self.channels is None) == (self.values is None):
            raise ValueError("exactly one of channels or values must be given")
        if self.channels is not None:
            chans = tuple(c if isinstance(c, Dmc) else Dmc(c) for c in self.channels)
            if len(chans) != n:
                raise ValueError(f"{len(chans)} channels for {n} weights")
            if len({c.n_inputs for c in chans}) != 1:
                raise ValueError("all channels must share the input alphabet")
            object.__setattr__(self, "channels", chans)
        else:
            v = np.asarray(self.values, dtype=float)
            if v.shape != (n,):
                raise ValueError(f"values must have shape ({n},), got {v.shape}")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    def __len__(self):
        return self.weights.size

    @property
    def n_inputs(self):
        return None if self.channels is None else self.channels[0].n_inputs

    def _require_channels(self):
        if self.channels is None:
            raise ValueError("this operation needs a grid with per-atom channels")


@dataclass(frozen=True)
class ConfidenceSet:
    mask: np.ndarray
    mass: float

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def indices(self):
        return np.flatnonzero(self.mask)


class OutageResult(NamedTuple):
    capacity: float
    argmax: Optional[InputDistribution]
    confidence_set: ConfidenceSet


def _weights_of(grid):
    if isinstance(grid, PosteriorGrid):
        return grid.weights
    return check_probability_vector(grid, "weights", atol=1e-9)


def confidence_set_for_values(values, grid, gamma):
    """Best confidence set for fixed per-atom values.

    Atoms are sorted ascending by value (ties by index) and the longest
    prefix with cumulative weight at most `gamma` is dropped.  The value is
    the smallest retained value.

    Returns
    -------
    (ConfidenceSet, float)
    """
    gamma = check_gamma(gamma)
    w = _weights_of(grid)
    v = np.asarray(values, dtype=float)
    if v.shape != w.shape:
        raise ValueError(f"values shape {v.shape} does not match {w.size} atoms")
    order = np.lexsort((np.arange(v.size), v))
    dropped = np.cumsum(w[order])
    n_drop = int(np.searchsorted(dropped, gamma, side="right"))
    n_drop = min(n_drop, v.size - 1)
    mask = np.ones(v.size, dtype=bool)
    mask[order[:n_drop]] = False
    return ConfidenceSet(mask, float(w[mask].sum())), float(v[order[n_drop]])


def outage_value_fixed_input(grid, P, gamma):
    """Outage value for a fixed input distribution `P`."""
    grid._require_channels()
    values = np.array([mutual_information(P, w) for w in grid.channels])
    cset, value = confidence_set_for_values(values, grid, gamma)
    return value, cset


def _single_capacity(w, constraint, tol):
    if constraint is None:
        return channel_capacity(w, tol=tol)
    return capacity_cost(w, constraint, tol=tol)


def estimation_induced_outage_capacity(grid, gamma, constraint=None, tol=1e-6,
                                       max_rounds=MAX_OUTER_ROUNDS):
    """Outage capacity of a channel-valued posterior grid.

    Alternates between the exact inner problems: the compound capacity over
    the current confidence set, and the best confidence set for the current
    input.  Each step cannot decrease the objective.  Several starting sets
    are tried (all atoms, the set chosen from per-atom capacities, and the
    set chosen at each atom's capacity-achieving input) and the best result
    is kept.  This is a local method; the brute-force oracle checks it on
    small instances.

    A grid of scalar values has no input to optimize; its result is
    confidence_set_for_values applied directly, with `argmax` set to None.
    """
    gamma = check_gamma(gamma)
    if grid.channels is None:
        cset, value = confidence_set_for_values(grid.values, grid, gamma)
        return OutageResult(value, None, cset)
    if constraint is not None:
        constraint.check_feasible(grid.n_inputs)
    channels = [c.matrix for c in grid.channels]
    cache = {}

    def compound(mask):
        key = mask.tobytes()
        if key not in cache:
            family = [channels[i] for i in np.flatnonzero(mask)]
            cache[key] = compound_capacity(family, tol=tol, constraint=constraint)
        return cache[key]

    def ascend(mask):
        value, p = compound(mask)
        cset = ConfidenceSet(mask, float(grid.weights[mask].sum()))
        for _ in range(max_rounds):
            _, new_set = outage_value_fixed_input(grid, p, gamma)
            if np.array_equal(new_set.mask, mask):
                break
            cand_value, cand_p = compound(new_set.mask)
            improved = cand_value >= value + tol
            if cand_value > value:
                value, p, cset, mask = cand_value, cand_p, new_set, new_set.mask
            if not improved:
                break
        else:
            raise ConvergenceError("alternating ascent hit its round cap", value, np.inf, p)
        return value, p, cset

    per_atom = [_single_capacity(w, constraint, tol) for w in channels]
    starts = [np.ones(len(grid), dtype=bool)]
    starts.append(confidence_set_for_values([c for c, _ in per_atom], grid, gamma)[0].mask)
    for _, p in per_atom:
        starts.append(outage_value_fixed_input(grid, p, gamma)[1].mask)

    best = None
    seen = set()
    for mask in starts:
        if mask.tobytes() in seen:
            continue
        seen.add(mask.tobytes())
        result = ascend(mask.copy())
        if best is None or result[0] > best[0]:
            best = result
    value, p, cset = best
    return OutageResult(value, p, cset)


def _simplex_grid(n_inputs, resolution):
    """All points of the simplex with coordinates in multiples of 1/resolution."""
    from math import comb

    count = comb(resolution + n_inputs - 1, n_inputs - 1)
    if count > MAX_SIMPLEX_POINTS:
        raise ValueError(
            f"simplex grid would have {count} points; lower the resolution"
        )
    if n_inputs == 1:
        return np.ones((1, 1))
    pts = []
    for bars in itertools.combinations(range(resolution + n_inputs - 1), n_inputs - 1):
        edges = (-1,) + bars + (resolution + n_inputs - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(n_inputs)])
    return np.asarray(pts, dtype=float) / resolution


def _mi_on_grid(w, pts):
    """I(P, W) for every row P of `pts`."""
    q = pts @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.where(w > 0, np.log2(np.where(w > 0, w, 1.0)), 0.0)
        # sum_x P(x) sum_y W log W - sum_y Q log Q
        h_cond = pts @ np.sum(w * logw, axis=1)
        h_out = np.sum(np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0), axis=1)
    return np.maximum(h_cond - h_out, 0.0)


def _concave_grid_max_bound(f, h):
    """Upper bound on the max of a concave function sampled at spacing h.

    Over each cell the function lies below the extensions of the neighbouring
    secants.
    """
    if f.size < 3:
        return np.inf
    s = np.diff(f) / h
    bounds = np.full(f.size - 1, np.inf)
    # left-neighbour secant extends over cell i for i >= 1
    bounds[1:] = np.minimum(bounds[1:], f[1:-1] + np.maximum(s[:-1], 0.0) * h)
    # right-neighbour secant extends over cell i for i <= n-3
    bounds[:-1] = np.minimum(bounds[:-1], f[1:-1] + np.maximum(-s[1:], 0.0) * h)
    return float(max(bounds.max(), f.max()))


def brute_force_outage(grid, gamma, simplex_resolution=1000, return_bracket=False):
    """Oracle: enumerate every confidence set and grid-search the input simplex.

    The returned value is a lower bound on the outage capacity.  For binary
    inputs, ``return_bracket=True`` also returns a certified upper bound from
    concavity of the max-min objective along the grid, so the true value lies
    in ``[lower, upper]``.
    """
    grid._require_channels()
    gamma = check_gamma(gamma)
    n = len(grid)
    if n > MAX_BRUTE_FORCE_ATOMS:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE_ATOMS} atoms, got {n}")
    resolution = int(simplex_resolution)
    if resolution < 1:
        raise ValueError("simplex_resolution must be a positive integer")
    pts = _simplex_grid(grid.n_inputs, resolution)
    table = np.array([_mi_on_grid(c.matrix, pts) for c in grid.channels])
    w = grid.weights
    binary = grid.n_inputs == 2
    lower = upper = -np.inf
    for bits in itertools.product((False, True), repeat=n):
        mask = np.array(bits)
        if not mask.any() or w[~mask].sum() > gamma:
            continue
        f = table[mask].min(axis=0)
        lower = max(lower, float(f.max()))
        if return_bracket and binary:
            upper = max(upper, _concave_grid_max_bound(f, 1.0 / resolution))
    if return_bracket:
        return lower, (upper if binary else np.inf)
    return lower
