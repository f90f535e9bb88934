"""Oracle suites run by ``outcap selftest``.

Each suite compares a production routine against an independent route
(enumeration, quadrature, closed form) and returns a short detail string or
raises AssertionError.
"""

import time

import numpy as np
from scipy import integrate
from scipy.special import i0e

from . import feedback, outage, power, ricean


def _rician_tail_quad(a, b):
    """Pr(R > b) for R Rician(a, 1) by adaptive quadrature of its density."""
    pdf = lambda r: r * np.exp(-0.5 * (r - a) ** 2) * i0e(a * r)
    below, _ = integrate.quad(pdf, 0.0, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 - below


def suite_outage_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(12):
        chans = [rng.dirichlet(np.full(2, 0.7), size=2) for _ in range(4)]
        grid = outage.PosteriorGrid(weights=rng.dirichlet(np.ones(4)), channels=chans)
        gamma = (0.0, 0.1, 0.3)[trial % 3]
        value = outage.estimation_induced_outage_capacity(grid, gamma, tol=1e-7).capacity
        lo, hi = outage.brute_force_outage(grid, gamma, 2000, return_bracket=True)
        assert lo - 1e-6 <= value <= hi + 1e-6, f"engine {value} outside [{lo}, {hi}]"
        worst = max(worst, hi - lo)
    return f"12 instances inside oracle bracket (widest {worst:.1e})"


def suite_marcum_quadrature():
    grid = np.arange(0.0, 5.01, 0.5)
    err = 0.0
    for a in grid:
        for b in grid:
            err = max(err, abs(ricean.marcum_q1(a, b) - _rician_tail_quad(a, b)))
    assert err <= 1e-8, f"max deviation {err:.2e}"
    return f"max |Q1 - quad| = {err:.1e}"


def suite_waterfill_kkt():
    dist = power.GainDistribution([1.0, 4.0], [0.5, 0.5])
    pol = power.waterfill(dist, 1.0)
    assert abs(pol.multiplier - 1.625) <= 1e-9, pol.multiplier
    assert np.allclose(pol.allocations, [0.625, 1.375], atol=1e-9, rtol=0), pol.allocations
    value = power.policy_value(dist, pol)
    expected = 0.5 * np.log2(1.625) + 0.5 * np.log2(6.5)
    assert abs(value - expected) <= 1e-12
    return f"mu = {pol.multiplier:.12g}"


def suite_lloyd_max_uniform():
    x = np.random.default_rng(3).random(10**6)
    q = feedback.lloyd_max_train(x, 2)
    assert np.allclose(q.levels_, [0.25, 0.75], atol=2e-3), q.levels_
    assert abs(q.boundaries_[0] - 0.5) <= 2e-3, q.boundaries_
    return f"levels {np.round(q.levels_, 4).tolist()}"


def suite_grid_vs_closed_form():
    rng = np.random.default_rng(11)
    gamma = 0.01
    worst = 0.0
    for _ in range(5):
        post = ricean.StatePosterior(
            mean=complex(rng.uniform(0, 2), rng.uniform(-1, 1)), var=rng.uniform(0.02, 0.3)
        )
        p_tx = rng.uniform(0.5, 10.0)
        atoms, weights = ricean.amplitude_grid(post, 2000)
        values = np.log2(1.0 + atoms**2 * p_tx)
        _, grid_value = outage.confidence_set_for_values(values, weights, gamma)
        closed = ricean.outage_capacity_closed_form(ricean.gamma_percentile(post, gamma), p_tx, 1.0)
        worst = max(worst, abs(grid_value - closed))
    assert worst <= 1e-2, f"grid and closed form differ by {worst:.3g} bits"
    return f"max difference {worst:.1e} bits"


SUITES = [
    ("outage-vs-brute-force", suite_outage_oracle),
    ("marcum-q-vs-quadrature", suite_marcum_quadrature),
    ("waterfill-kkt", suite_waterfill_kkt),
    ("lloyd-max-uniform", suite_lloyd_max_uniform),
    ("grid-vs-closed-form", suite_grid_vs_closed_form),
]


def run_selftest(echo=print):
    """Run all suites, echo one line each, and return True iff all pass."""
    ok = True
    for name, suite in SUITES:
        start = time.perf_counter()
        try:
            detail = suite()
            status = "PASS"
        except Exception as exc:  # report every failure, keep going
            detail = f"{type(exc).__name__}: {exc}"
            status = "FAIL"
            ok = False
        echo(f"{status} {name}: {detail} [{time.perf_counter() - start:.1f}s]")
    return ok
