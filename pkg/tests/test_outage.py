import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from outcap.dmc import InputCost, bsc, channel_capacity, compound_capacity, mutual_information
from outcap.outage import (
    PosteriorGrid,
    brute_force_outage,
    confidence_set_for_values,
    estimation_induced_outage_capacity,
    outage_value_fixed_input,
)


def enumerate_best(values, weights, gamma):
    """max over subsets with mass >= 1 - gamma of the min retained value."""
    best = -np.inf
    for bits in itertools.product((False, True), repeat=len(values)):
        mask = np.array(bits)
        if mask.any() and weights[~mask].sum() <= gamma:
            best = max(best, values[mask].min())
    return best


class TestPosteriorGrid:
    def test_exactly_one_payload(self):
        with pytest.raises(ValueError):
            PosteriorGrid(weights=[1.0])
        with pytest.raises(ValueError):
            PosteriorGrid(weights=[1.0], values=[1.0], channels=[np.eye(2)])

    def test_shared_input_alphabet(self):
        with pytest.raises(ValueError):
            PosteriorGrid(weights=[0.5, 0.5], channels=[np.eye(2), np.eye(3)])

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            PosteriorGrid(weights=[0.5, 0.6], values=[1.0, 2.0])


class TestConfidenceSet:
    def test_drops_lowest_within_budget(self):
        cset, value = confidence_set_for_values([3.0, 1.0, 2.0], [0.5, 0.1, 0.4], 0.2)
        assert value == 2.0
        np.testing.assert_array_equal(cset.indices, [0, 2])
        assert cset.mass == pytest.approx(0.9)

    def test_gamma_zero_keeps_all(self):
        cset, value = confidence_set_for_values([3.0, 1.0], [0.5, 0.5], 0.0)
        assert value == 1.0
        assert cset.mask.all()

    def test_boundary_mass_is_droppable(self):
        _, value = confidence_set_for_values([1.0, 2.0], [0.25, 0.75], 0.25)
        assert value == 2.0

    def test_zero_weight_atoms_dropped(self):
        _, value = confidence_set_for_values([0.0, 5.0], [0.0, 1.0], 0.0)
        assert value == 5.0

    def test_never_empty(self):
        cset, value = confidence_set_for_values([1.0, 2.0], [0.5, 0.5], 0.999)
        assert cset.mask.sum() == 1 and value == 2.0

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 10), st.floats(0.0, 0.95), st.integers(0, 2**32 - 1))
    def test_matches_enumeration(self, n, gamma, seed):
        r = np.random.default_rng(seed)
        w = r.dirichlet(np.ones(n))
        v = r.integers(0, 4, n).astype(float)  # frequent ties
        cset, value = confidence_set_for_values(v, w, gamma)
        assert value == enumerate_best(v, w, gamma)
        assert w[~cset.mask].sum() <= gamma + 1e-12
        assert v[cset.mask].min() == value

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_nondecreasing_in_gamma(self, n, seed):
        r = np.random.default_rng(seed)
        w, v = r.dirichlet(np.ones(n)), r.random(n)
        vals = [confidence_set_for_values(v, w, g)[1] for g in (0.0, 0.1, 0.3, 0.6)]
        assert np.all(np.diff(vals) >= 0)


class TestOutageCapacity:
    def test_single_atom_is_capacity(self):
        grid = PosteriorGrid(weights=[1.0], channels=[bsc(0.1)])
        res = estimation_induced_outage_capacity(grid, 0.0)
        assert res.capacity == pytest.approx(channel_capacity(bsc(0.1))[0], abs=1e-8)

    def test_gamma_zero_is_compound(self):
        chans = [bsc(0.05), bsc(0.2), bsc(0.15)]
        grid = PosteriorGrid(weights=[0.2, 0.5, 0.3], channels=chans)
        res = estimation_induced_outage_capacity(grid, 0.0, tol=1e-8)
        assert res.capacity == pytest.approx(compound_capacity(chans, tol=1e-8)[0], abs=1e-6)

    def test_drops_rare_bad_state(self):
        grid = PosteriorGrid(weights=[0.05, 0.95], channels=[bsc(0.45), bsc(0.05)])
        res = estimation_induced_outage_capacity(grid, 0.1)
        assert res.capacity == pytest.approx(channel_capacity(bsc(0.05))[0], abs=1e-7)
        np.testing.assert_array_equal(res.confidence_set.indices, [1])

    def test_scalar_values_grid(self):
        grid = PosteriorGrid(weights=[0.1, 0.3, 0.6], values=[0.5, 1.0, 2.0])
        assert estimation_induced_outage_capacity(grid, 0.1).capacity == 1.0

    def test_result_is_consistent(self, rng):
        chans = [rng.dirichlet(np.ones(3), size=3) for _ in range(5)]
        grid = PosteriorGrid(weights=rng.dirichlet(np.ones(5)), channels=chans)
        res = estimation_induced_outage_capacity(grid, 0.2, tol=1e-8)
        value, cset = outage_value_fixed_input(grid, res.argmax, 0.2)
        assert value == pytest.approx(res.capacity, abs=1e-6)
        worst = min(mutual_information(res.argmax, chans[i]) for i in res.confidence_set.indices)
        assert worst == pytest.approx(res.capacity, abs=1e-6)

    def test_constrained(self):
        grid = PosteriorGrid(weights=[0.5, 0.5], channels=[np.eye(2), np.eye(2)])
        res = estimation_induced_outage_capacity(grid, 0.0, constraint=InputCost([0.0, 1.0], 0.2))
        assert res.capacity == pytest.approx(0.7219280948873623, abs=1e-6)

    @pytest.mark.parametrize("seed", range(10))
    def test_ternary_vs_brute_force(self, seed):
        # three inputs: only the grid lower bound is available
        r = np.random.default_rng(100 + seed)
        grid = PosteriorGrid(weights=r.dirichlet(np.ones(4)),
                             channels=[r.dirichlet(np.ones(3), size=3) for _ in range(4)])
        value = estimation_induced_outage_capacity(grid, 0.15, tol=1e-8).capacity
        lower = brute_force_outage(grid, 0.15, simplex_resolution=200)
        assert value >= lower - 1e-7
        assert value <= lower + 0.01

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.1, 0.25]))
    def test_binary_within_bracket(self, seed, gamma):
        r = np.random.default_rng(seed)
        grid = PosteriorGrid(weights=r.dirichlet(np.ones(4)),
                             channels=[r.dirichlet(np.ones(2), size=2) for _ in range(4)])
        value = estimation_induced_outage_capacity(grid, gamma, tol=1e-8).capacity
        lo, hi = brute_force_outage(grid, gamma, 1000, return_bracket=True)
        assert lo - 1e-7 <= value <= hi + 1e-7


class TestBruteForce:
    def test_too_many_atoms(self):
        grid = PosteriorGrid(weights=np.full(16, 1 / 16), channels=[np.eye(2)] * 16)
        with pytest.raises(ValueError):
            brute_force_outage(grid, 0.1)

    def test_bsc_pair(self):
        grid = PosteriorGrid(weights=[0.5, 0.5], channels=[bsc(0.1), bsc(0.2)])
        lo, hi = brute_force_outage(grid, 0.0, 1000, return_bracket=True)
        assert lo <= 0.2780719051126377 <= hi
