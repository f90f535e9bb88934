"""Finite-alphabet channels, mutual information and capacity solvers.

All information quantities are in bits.  Zero-probability terms are handled
symbolically: ``0 log 0 = 0`` and ``p log(p / 0) = +inf``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from ._validation import check_probability_vector, check_stochastic_matrix

__all__ = [
    "ConvergenceError",
    "InfeasibleError",
    "InputDistribution",
    "Dmc",
    "InputCost",
    "bsc",
    "bec",
    "mutual_information",
    "kl_divergence",
    "channel_capacity",
    "compound_capacity",
    "capacity_cost",
]

DEFAULT_MAX_ITER = 100_000
MAX_CUT_ROUNDS = 200
BA_POLISH_AFTER = 2000
_LOG2E = float(np.log2(np.e))


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver hits its iteration cap.

    Carries the best certified bracket ``[lower, upper]`` and the input
    distribution attaining ``lower``.
    """

    def __init__(self, message, lower, upper, argmax=None):
        super().__init__(f"{message} (bracket [{lower:.6g}, {upper:.6g}])")
        self.lower = lower
        self.upper = upper
        self.argmax = argmax


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class InputDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = check_probability_vector(self.probs, "probs", atol=1e-12)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)


@dataclass(frozen=True)
class Dmc:
    """Row-stochastic transition matrix ``W[x, y] = W(y|x)``.

    Rows are validated to sum to one within 1e-9 and then renormalized.
    """

    matrix: np.ndarray

    def __post_init__(self):
        w = check_stochastic_matrix(self.matrix, "matrix", atol=1e-9)
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)

    @property
    def n_inputs(self):
        return self.matrix.shape[0]

    @property
    def n_outputs(self):
        return self.matrix.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True)
class InputCost:
    """Per-symbol cost and a budget on the average cost ``sum_x cost[x] P(x)``."""

    cost: np.ndarray
    budget: float

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("cost must be a nonempty 1-d array")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("costs must be finite and nonnegative")
        budget = float(self.budget)
        if not budget >= 0:
            raise ValueError(f"budget must be nonnegative, got {budget!r}")
        c.setflags(write=False)
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "budget", budget)

    def check_feasible(self, n_inputs=None):
        if n_inputs is not None and self.cost.size != n_inputs:
            raise ValueError(
                f"cost has {self.cost.size} entries but the channel has {n_inputs} inputs"
            )
        if self.budget < self.cost.min():
            raise InfeasibleError(
                f"budget {self.budget} is below the cheapest symbol cost {self.cost.min()}"
            )

    def average(self, p):
        return float(self.cost @ np.asarray(p, dtype=float))


def bsc(p):
    """Binary symmetric channel with crossover probability `p`."""
    return Dmc(np.array([[1 - p, p], [p, 1 - p]]))


def bec(eps):
    """Binary erasure channel; outputs are (0, erasure, 1)."""
    return Dmc(np.array([[1 - eps, eps, 0.0], [0.0, eps, 1 - eps]]))


def _as_matrix(w):
    if isinstance(w, Dmc):
        return w.matrix
    return Dmc(w).matrix


def _as_probs(p):
    if isinstance(p, InputDistribution):
        return p.probs
    return check_probability_vector(p, "P", atol=1e-9)


def _row_divergences(w, q):
    """D(W(.|x) || q) in bits for every input row x; +inf where unsupported."""
    pos = w > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, w * (np.log2(np.where(pos, w, 1.0)) - np.log2(q)), 0.0)
    d = terms.sum(axis=1)
    blocked = np.any(pos & (q <= 0), axis=1)
    d[blocked] = np.inf
    return d


def mutual_information(P, W):
    """I(P, W) in bits."""
    w = _as_matrix(W)
    p = _as_probs(P)
    if p.size != w.shape[0]:
        raise ValueError(
            f"input distribution has {p.size} entries, channel has {w.shape[0]} inputs"
        )
    joint = p[:, None] * w
    q = joint.sum(axis=0)
    mask = joint > 0
    # joint > 0 implies both w > 0 and q > 0
    ratio = np.where(mask, w, 1.0) / np.where(mask, q[None, :], 1.0)
    value = float(np.sum(joint[mask] * np.log2(ratio[mask])))
    return max(value, 0.0)


def kl_divergence(P, Q):
    """D(P || Q) in bits; ``inf`` when P is not absolutely continuous w.r.t. Q."""
    p = np.asarray(P, dtype=float)
    q = np.asarray(Q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(support & (q <= 0)):
        return float("inf")
    return float(np.sum(p[support] * np.log2(p[support] / q[support])))


def _blahut_arimoto(w, tol, max_iter, cost=None, slope=0.0, p0=None):
    """Blahut-Arimoto for max_P I(P, W) - slope * cost(P).

    Returns (p, lower, upper) where lower is the penalized objective at p and
    upper = max_x [D(W_x || Q) - slope * cost_x] bounds the penalized optimum.
    """
    n = w.shape[0]
    penalty = np.zeros(n) if cost is None else slope * cost
    p = np.full(n, 1.0 / n) if p0 is None else np.asarray(p0, dtype=float).copy()
    lower = upper = np.nan
    for _ in range(int(max_iter)):
        q = p @ w
        score = _row_divergences(w, q) - penalty
        finite = np.isfinite(score)
        lower = float(p[finite] @ score[finite])
        upper = float(score.max())
        if upper - lower < tol:
            return p, lower, upper
        # exponent shift keeps the update in range
        step = np.where(finite, score - upper, -np.inf)
        p = p * np.exp2(step)
        p /= p.sum()
    raise ConvergenceError("Blahut-Arimoto did not converge", lower, upper, p)


def channel_capacity(W, tol=1e-9, max_iter=DEFAULT_MAX_ITER):
    """Capacity of a DMC by Blahut-Arimoto.

    Iterates until the standard bounds ``I(P, W) <= C <= max_x D(W_x || Q)``
    are within `tol`.  Blahut-Arimoto slows down sharply on nearly useless
    channels; if it stalls, the iterate is polished by SLSQP and the same
    bounds are rechecked before iterating further.

    Returns
    -------
    capacity : float
        Lower end of the final bracket, in bits.
    argmax : InputDistribution
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    w = _as_matrix(W)
    first = min(int(max_iter), BA_POLISH_AFTER)
    try:
        p, lower, _ = _blahut_arimoto(w, tol, first)
        return max(lower, 0.0), InputDistribution(p)
    except ConvergenceError as exc:
        p = exc.argmax
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log2(np.where(w > 0, w, 1.0)), 0.0)
    p = _epigraph_polish(w[None], logw[None], p)
    try:
        p, lower, _ = _blahut_arimoto(w, tol, max(int(max_iter) - first, 1), p0=p)
    except ConvergenceError as exc:
        raise ConvergenceError(
            "channel_capacity did not converge", exc.lower, exc.upper,
            InputDistribution(exc.argmax),
        ) from None
    return max(lower, 0.0), InputDistribution(p)


def _entropic_projection(y, cost, budget):
    """KL projection of a positive vector onto {P in simplex : cost.P <= budget}.

    The solution has the form P ~ y * exp(-s * cost) with s >= 0.
    """
    p = y / y.sum()
    if cost is None or cost @ p <= budget:
        return p
    shifted = cost - cost.min()

    def tilt(s):
        v = y * np.exp(-s * shifted)
        return v / v.sum()

    lo, hi = 0.0, 1.0
    while cost @ tilt(hi) > budget:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cost @ tilt(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return tilt(hi)


def _family_divergences(stack, logw, p):
    """Row divergences D(W_k(.|x) || Q_k) for every channel k and input x."""
    q = np.einsum("i,kij->kj", p, stack)
    pos = stack > 0
    with np.errstate(divide="ignore"):
        logq = np.log2(q)
    terms = np.where(pos, stack * (logw - logq[:, None, :]), 0.0)
    d = terms.sum(axis=-1)
    blocked = np.any(pos & (q[:, None, :] <= 0), axis=-1)
    d[blocked] = np.inf
    return d


def _family_values(d, p):
    support = p > 0
    return np.where(support, p, 0.0) @ np.where(support, d, 0.0).T


def _compound_upper_bound(d, cost=None, budget=None):
    """Certified upper bound on max_P min_k I(P, W_k), and the LP maximizer.

    For any output laws Q_k, I(P, W_k) <= sum_x P(x) D(W_k(.|x) || Q_k).  The
    max-min of these linear surrogates (one per row of `d`) is a small LP.
    With Q_k taken from the current input the bound is tight at the optimum.
    Rows with an infinite entry carry no information and are skipped.
    """
    d = d[np.all(np.isfinite(d), axis=1)]
    if d.shape[0] == 0:
        return np.inf, None
    k, n = d.shape
    # variables (P_1..P_n, t); maximize t
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-d, np.ones((k, 1))])
    b_ub = np.zeros(k)
    if cost is not None:
        a_ub = np.vstack([a_ub, np.append(cost, 0.0)])
        b_ub = np.append(b_ub, budget)
    a_eq = np.append(np.ones(n), 0.0)[None, :]
    bounds = [(0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds,
                  method="highs")
    if res.status != 0:
        return np.inf, None
    p = np.maximum(res.x[:n], 0.0)
    # slack for LP round-off
    return float(-res.fun) + 1e-12, p / p.sum()


def _epigraph_polish(stack, logw, p, cost=None, budget=None):
    """Maximize t subject to I(P, W_k) >= t by SLSQP, starting from `p`.

    The constraints are smooth where every Q_k is positive, and the gradient
    of I(P, W_k) in P_x is D(W_k(.|x) || Q_k) - log2(e).
    """
    n = p.size

    def values(x):
        q = np.maximum(x[:n], 0.0)
        q = q / q.sum()
        d = _family_divergences(stack, logw, q)
        return d, _family_values(d, q)

    def jac(x):
        d, _ = values(x)
        d = np.where(np.isfinite(d), d, 1e6)
        return np.hstack([d - _LOG2E, -np.ones((d.shape[0], 1))])

    cons = [
        {"type": "ineq", "fun": lambda x: values(x)[1] - x[n], "jac": jac},
        {"type": "eq", "fun": lambda x: x[:n].sum() - 1.0,
         "jac": lambda x: np.append(np.ones(n), 0.0)},
    ]
    if cost is not None:
        cons.append({"type": "ineq", "fun": lambda x: budget - cost @ x[:n],
                     "jac": lambda x: np.append(-cost, 0.0)})
    x0 = np.append(p, values(np.append(p, 0.0))[1].min())
    res = minimize(lambda x: -x[n], x0, jac=lambda x: np.append(np.zeros(n), -1.0),
                   method="SLSQP", bounds=[(0.0, 1.0)] * n + [(None, None)],
                   constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
    q = np.maximum(res.x[:n], 0.0)
    if not np.all(np.isfinite(q)) or q.sum() <= 0:
        return p
    q = q / q.sum()
    if cost is not None and cost @ q > budget:
        q = _entropic_projection(q + 1e-300, cost, budget)
    return q


def compound_capacity(Ws, tol=1e-6, constraint=None, max_iter=DEFAULT_MAX_ITER,
                      step_scale=1.0, check_every=25, p0=None):
    """max over P of min over the family of I(P, W_k).

    The objective is concave in P.  The epigraph form (maximize t subject to
    I(P, W_k) >= t) is solved by SLSQP.  Linearizing each I(P, W_k) at an
    input gives an LP whose optimum is a certified upper bound; Kelley
    cutting planes on these linearizations close any remaining gap.  If the
    bracket is still wider than `tol`, entropic mirror ascent with step
    ``step_scale / (G sqrt(t))`` and iterate averaging takes over, with an
    LP check every `check_every` steps.

    Returns
    -------
    value : float
        Certified lower bound, in bits.
    argmax : InputDistribution
    """
    mats = [_as_matrix(w) for w in Ws]
    if not mats:
        raise ValueError("compound_capacity needs at least one channel")
    n = mats[0].shape[0]
    if any(w.shape[0] != n for w in mats):
        raise ValueError("all channels must share the input alphabet")
    if not tol > 0:
        raise ValueError("tol must be positive")
    cost = budget = None
    if constraint is not None:
        constraint.check_feasible(n)
        cost, budget = constraint.cost, constraint.budget
        if budget >= cost.max():
            cost = budget = None
    if cost is not None and budget <= cost.min():
        # only the cheapest symbols are usable
        keep = cost <= budget
        sub = [w[keep] for w in mats]
        value, p_sub = compound_capacity(sub, tol=tol, max_iter=max_iter,
                                         step_scale=step_scale, check_every=check_every)
        p = np.zeros(n)
        p[keep] = p_sub.probs
        return value, InputDistribution(p)
    if len(mats) == 1 and cost is None:
        return channel_capacity(mats[0], tol=tol, max_iter=max_iter)
    if cost is not None and len(mats) == 1:
        return capacity_cost(mats[0], constraint, tol=tol, max_iter=max_iter)

    width = max(w.shape[1] for w in mats)
    stack = np.zeros((len(mats), n, width))
    for i, w in enumerate(mats):
        stack[i, :, : w.shape[1]] = w
    with np.errstate(divide="ignore"):
        logw = np.where(stack > 0, np.log2(np.where(stack > 0, stack, 1.0)), 0.0)

    if p0 is None:
        p = _entropic_projection(np.ones(n), cost, budget)
    else:
        p = _entropic_projection(np.asarray(p0, dtype=float) + 1e-300, cost, budget)

    best_p, best_low, upper = p, -np.inf, np.inf
    cuts = np.empty((0, n))

    def consider(q):
        nonlocal best_p, best_low, upper, cuts
        d = _family_divergences(stack, logw, q)
        low = _family_values(d, q).min()
        if low > best_low:
            best_low, best_p = low, q
        cuts = np.vstack([cuts, d])
        bound, p_lp = _compound_upper_bound(cuts, cost, budget)
        upper = min(upper, bound)
        return p_lp

    def done():
        return upper - best_low < tol

    def result():
        return max(float(best_low), 0.0), InputDistribution(best_p)

    # smooth polish, then Kelley cutting planes on the accumulated linear bounds
    p_lp = consider(_epigraph_polish(stack, logw, p, cost, budget))
    for _ in range(MAX_CUT_ROUNDS):
        if done():
            return result()
        if p_lp is None:
            break
        p_lp = consider(p_lp)
    if done():
        return result()

    # fallback: entropic mirror ascent with iterate averaging
    p = best_p
    avg = np.zeros(n)
    weight_sum = 0.0
    for t in range(1, int(max_iter) + 1):
        d = _family_divergences(stack, logw, p)
        vals = _family_values(d, p)
        if vals.min() > best_low:
            best_low, best_p = vals.min(), p.copy()
        g = d[int(np.argmin(vals))]
        g = np.where(np.isfinite(g), g, 0.0)
        g -= g.max()
        scale = max(-g.min(), 1e-12)
        eta = step_scale / (scale * np.sqrt(t))
        p = _entropic_projection(p * np.exp(eta * g) + 1e-300, cost, budget)
        avg += eta * p
        weight_sum += eta
        if t % check_every == 0:
            consider(avg / weight_sum)
            if done():
                return result()
    raise ConvergenceError("compound_capacity did not converge", best_low, upper,
                           InputDistribution(best_p))


def capacity_cost(W, cost, tol=1e-7, max_iter=DEFAULT_MAX_ITER):
    """Capacity of `W` subject to ``sum_x cost[x] P(x) <= budget``.

    Blahut-Arimoto on the Lagrangian ``I(P, W) - s * cost(P)`` with an outer
    bisection on the multiplier ``s``.  The returned value is certified within
    `tol` by the dual bound ``max_x [D(W_x || Q) - s cost_x] + s * budget``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    w = _as_matrix(W)
    n = w.shape[0]
    cost.check_feasible(n)
    c, budget = cost.cost, cost.budget
    inner_tol = tol / 4

    if budget <= c.min():
        keep = c <= budget
        value, p_sub = channel_capacity(w[keep], tol=tol, max_iter=max_iter)
        p = np.zeros(n)
        p[keep] = p_sub.probs
        return value, InputDistribution(p)

    p, low, up = _blahut_arimoto(w, inner_tol, max_iter)
    if c @ p <= budget:
        return max(low, 0.0), InputDistribution(p)

    def solve(s, start):
        return _blahut_arimoto(w, inner_tol, max_iter, cost=c, slope=s, p0=start)

    lo, hi = 0.0, 1.0
    p_hi, _, up_hi = solve(hi, p)
    while c @ p_hi > budget:
        lo = hi
        hi *= 2.0
        if hi > 1e9:
            raise ConvergenceError("cost multiplier diverged", 0.0, np.inf)
        p_hi, _, up_hi = solve(hi, p_hi)
    for _ in range(200):
        value = mutual_information(p_hi, w)
        upper = up_hi + hi * budget
        if upper - value < tol:
            return max(value, 0.0), InputDistribution(p_hi)
        mid = 0.5 * (lo + hi)
        p_mid, _, up_mid = solve(mid, p_hi)
        if c @ p_mid > budget:
            lo = mid
        else:
            hi, p_hi, up_hi = mid, p_mid, up_mid
        if hi - lo < 1e-15:
            inner_tol /= 10
    raise ConvergenceError("capacity_cost bisection did not converge",
                           mutual_information(p_hi, w), up_hi + hi * budget,
                           InputDistribution(p_hi))
