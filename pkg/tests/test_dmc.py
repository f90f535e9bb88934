import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from outcap.dmc import (
    Dmc,
    InfeasibleError,
    InputCost,
    InputDistribution,
    bec,
    bsc,
    capacity_cost,
    channel_capacity,
    compound_capacity,
    kl_divergence,
    mutual_information,
)

from conftest import grid_search_max_min, h2


class TestTypes:
    def test_dmc_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            Dmc([[0.5, 0.6], [0.5, 0.5]])
        with pytest.raises(ValueError):
            Dmc([[-0.1, 1.1]])

    def test_dmc_is_read_only(self):
        w = bsc(0.1)
        with pytest.raises(ValueError):
            w.matrix[0, 0] = 0.5

    def test_input_distribution_validation(self):
        with pytest.raises(ValueError):
            InputDistribution([0.7, 0.7])
        np.testing.assert_allclose(InputDistribution([0.25, 0.75]).probs, [0.25, 0.75])

    def test_infeasible_budget(self):
        with pytest.raises(InfeasibleError):
            capacity_cost(bsc(0.1), InputCost([1.0, 2.0], 0.5))


class TestMutualInformation:
    def test_noiseless_binary(self):
        assert mutual_information([0.5, 0.5], np.eye(2)) == pytest.approx(1.0, abs=1e-15)

    def test_useless_channel(self):
        assert mutual_information([0.3, 0.7], [[0.4, 0.6], [0.4, 0.6]]) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_input(self):
        assert mutual_information([1.0, 0.0], bsc(0.2)) == pytest.approx(0.0, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_bounded_by_entropies(self, seed):
        r = np.random.default_rng(seed)
        p = r.dirichlet(np.ones(3))
        w = r.dirichlet(np.ones(4), size=3)
        mi = mutual_information(p, w)
        h_in = -np.sum(p[p > 0] * np.log2(p[p > 0]))
        assert -1e-12 <= mi <= h_in + 1e-12
        assert mi <= np.log2(4) + 1e-12

    def test_kl(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == np.inf
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)


class TestChannelCapacity:
    @pytest.mark.parametrize("p", [0.0, 0.01, 0.11, 0.3, 0.5])
    def test_bsc(self, p):
        cap, pin = channel_capacity(bsc(p))
        assert cap == pytest.approx(1 - float(h2(p)), abs=1e-9)
        if p < 0.5:
            np.testing.assert_allclose(pin.probs, [0.5, 0.5], atol=1e-6)

    def test_bec(self):
        assert channel_capacity(bec(0.3))[0] == pytest.approx(0.7, abs=1e-9)

    def test_z_channel(self):
        # Z-channel with crossover 1/2: capacity log2(5/4)
        cap, pin = channel_capacity([[1.0, 0.0], [0.5, 0.5]])
        assert cap == pytest.approx(np.log2(1.25), abs=1e-9)
        np.testing.assert_allclose(pin.probs, [0.6, 0.4], atol=1e-5)

    def test_fast(self):
        start = time.perf_counter()
        channel_capacity(np.random.default_rng(0).dirichlet(np.ones(8), size=8))
        assert time.perf_counter() - start < 1.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_achieves_mi_at_argmax(self, seed):
        w = np.random.default_rng(seed).dirichlet(np.ones(3), size=3)
        cap, pin = channel_capacity(w)
        assert mutual_information(pin, w) == pytest.approx(cap, abs=1e-8)
        assert cap <= np.log2(3) + 1e-12


class TestCompound:
    def test_two_bsc(self):
        cap, pin = compound_capacity([bsc(0.1), bsc(0.2)], tol=1e-8)
        assert cap == pytest.approx(1 - float(h2(0.2)), abs=1e-6)
        np.testing.assert_allclose(pin.probs, [0.5, 0.5], atol=1e-3)

    def test_singleton_is_capacity(self):
        w = [[0.9, 0.1], [0.3, 0.7]]
        assert compound_capacity([w])[0] == pytest.approx(channel_capacity(w)[0], abs=1e-8)

    def test_saddle_pair(self):
        # two Z-channels pointing in opposite directions; their min has an interior saddle
        ws = [[[1.0, 0.0], [0.5, 0.5]], [[0.5, 0.5], [0.0, 1.0]]]
        cap, _ = compound_capacity(ws, tol=1e-8)
        assert cap == pytest.approx(grid_search_max_min(ws), abs=1e-6)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_binary_vs_grid(self, seed):
        r = np.random.default_rng(seed)
        ws = [r.dirichlet(np.ones(2), size=2) for _ in range(3)]
        cap, pin = compound_capacity(ws, tol=1e-8)
        assert cap == pytest.approx(grid_search_max_min(ws), abs=1e-6)
        assert min(mutual_information(pin, w) for w in ws) == pytest.approx(cap, abs=1e-7)

    def test_constrained(self):
        cost = InputCost([0.0, 1.0], 0.2)
        cap, pin = compound_capacity([np.eye(2), np.eye(2)], constraint=cost)
        assert cap == pytest.approx(float(h2(0.2)), abs=1e-6)
        assert cost.average(pin.probs) <= 0.2 + 1e-9


class TestCapacityCost:
    def test_noiseless_budget(self):
        cap, pin = capacity_cost(np.eye(2), InputCost([0.0, 1.0], 0.2))
        assert cap == pytest.approx(float(h2(0.2)), abs=1e-7)
        np.testing.assert_allclose(pin.probs, [0.8, 0.2], atol=1e-5)

    def test_slack_budget_is_capacity(self):
        cap, _ = capacity_cost(bsc(0.1), InputCost([0.0, 1.0], 0.9))
        assert cap == pytest.approx(1 - float(h2(0.1)), abs=1e-7)

    def test_zero_budget(self):
        cap, pin = capacity_cost(bsc(0.1), InputCost([0.0, 1.0], 0.0))
        assert cap == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(pin.probs, [1.0, 0.0])

    def test_nondecreasing_in_budget(self):
        w = [[0.8, 0.2, 0.0], [0.1, 0.8, 0.1], [0.0, 0.3, 0.7]]
        caps = [capacity_cost(w, InputCost([0.0, 1.0, 2.0], b))[0] for b in (0.1, 0.4, 0.8, 1.2)]
        assert np.all(np.diff(caps) >= -1e-7)
