import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from outcap.feedback import LloydMaxQuantizer, decode, encode, lloyd_max_train


class TestLloydMax:
    def test_uniform_two_levels(self):
        x = np.random.default_rng(0).random(10**6)
        q = lloyd_max_train(x, 2)
        np.testing.assert_allclose(q.levels_, [0.25, 0.75], atol=2e-3)
        assert q.distortion_ == pytest.approx(1 / 48, rel=0.01)

    def test_gaussian_four_levels(self):
        # tabulated optimum for the unit Gaussian: +-0.4528, +-1.5104
        x = np.random.default_rng(1).standard_normal(10**6)
        q = lloyd_max_train(x, 4)
        np.testing.assert_allclose(q.levels_, [-1.5104, -0.4528, 0.4528, 1.5104], atol=1e-2)

    def test_two_point_sample(self):
        q = lloyd_max_train([0.0, 0.0, 1.0, 1.0], 2)
        np.testing.assert_allclose(q.levels_, [0.0, 1.0])
        assert q.distortion_ == 0.0

    def test_single_level_is_mean(self):
        x = np.random.default_rng(2).exponential(size=1000)
        q = lloyd_max_train(x, 1)
        assert q.levels_[0] == pytest.approx(x.mean())
        assert q.distortion_ == pytest.approx(x.var())

    def test_too_few_distinct(self):
        with pytest.raises(ValueError):
            lloyd_max_train([1.0, 1.0, 1.0], 2)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    def test_distortion_history_nonincreasing(self, seed, levels):
        x = np.random.default_rng(seed).gamma(2.0, size=5000)
        q = lloyd_max_train(x, levels)
        hist = np.asarray(q.distortion_history_)
        assert np.all(np.diff(hist) <= 1e-12 * hist[0])

    def test_distortion_nonincreasing_in_levels(self):
        x = np.random.default_rng(3).rayleigh(size=20_000)
        d = [lloyd_max_train(x, n).distortion_ for n in (1, 2, 4, 8, 16)]
        assert np.all(np.diff(d) <= 0)

    def test_encode_decode(self):
        q = lloyd_max_train(np.random.default_rng(4).random(10_000), 4)
        idx = encode(q, [0.0, 0.3, 0.99])
        assert list(idx) == [0, 1, 3]
        np.testing.assert_allclose(decode(q, idx), q.levels_[[0, 1, 3]])
        with pytest.raises(IndexError):
            decode(q, [4])

    def test_boundary_ties_go_low(self):
        q = lloyd_max_train([0.0, 0.0, 1.0, 1.0], 2)
        assert encode(q, [0.5])[0] == 0

    def test_nearest_neighbour(self):
        x = np.random.default_rng(5).random(5000)
        q = lloyd_max_train(x, 8)
        nearest = np.argmin(np.abs(x[:, None] - q.levels_[None, :]), axis=1)
        np.testing.assert_array_equal(q.transform(x), nearest)


class TestEstimator:
    def test_transformer_api(self):
        x = np.random.default_rng(6).random((1000, 1))
        q = LloydMaxQuantizer(n_levels=4).fit(x)
        out = q.fit_transform(x)
        assert out.shape == (1000,)
        assert clone(q).get_params()["n_levels"] == 4
        np.testing.assert_allclose(q.inverse_transform(out), q.quantize(x))
