import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from garchmimic.vtransform import VTransform, custom, linear, power, symmetric

unit = st.floats(0.0, 1.0)
fulcrums = st.floats(0.05, 0.95)
kappas = st.floats(0.3, 4.0)


def _transforms():
    grid = np.linspace(0, 1, 11)
    return [linear(0.5), linear(0.25), power(0.5, 2.0), power(0.35, 0.6),
            custom(0.4, grid, grid ** 1.5)]


class TestEval:
    def test_fulcrum_maps_to_zero(self):
        assert linear(0.5)(0.5) == 0.0

    def test_endpoints(self):
        assert linear(0.5)(0.0) == 1.0
        assert linear(0.5)(1.0) == 1.0

    def test_linear_left_branch(self):
        assert_allclose(linear(0.25)(0.1), 0.6, rtol=1e-14)

    def test_power(self):
        assert_allclose(power(0.5, 2.0)(0.25), 0.625, rtol=1e-14)

    def test_symmetric_is_abs(self):
        u = np.linspace(0, 1, 101)
        assert_allclose(symmetric()(u), np.abs(2 * u - 1), atol=1e-15)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            linear(0.5)(1.2)
        with pytest.raises(ValueError):
            linear(0.5)(np.nan)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
    def test_bad_fulcrum(self, bad):
        with pytest.raises(ValueError):
            VTransform(bad)

    def test_bad_generators(self):
        with pytest.raises(ValueError):
            power(0.5, 0.0)
        with pytest.raises(ValueError):
            custom(0.5, [0, 0.5, 1], [0, 0.7, 0.6])
        with pytest.raises(ValueError):
            custom(0.5, [0, 1], [0.1, 1])

    @pytest.mark.parametrize("vt", _transforms(), ids=repr)
    def test_monotone_branches(self, vt):
        d = vt.fulcrum
        left = vt(np.linspace(0, d, 200))
        right = vt(np.linspace(d, 1, 200))
        assert np.all(np.diff(left) < 0)
        assert np.all(np.diff(right) > 0)

    @pytest.mark.parametrize("vt", _transforms(), ids=repr)
    def test_uniformity(self, vt):
        u = np.random.default_rng(3).random(100_000)
        assert stats.kstest(vt(u), "uniform").pvalue > 0.01

    def test_custom_linear_generator_matches_linear(self):
        grid = np.linspace(0, 1, 5)
        u = np.linspace(0, 1, 57)
        assert_allclose(custom(0.3, grid, grid)(u), linear(0.3)(u), atol=1e-14)

    def test_derivative_matches_finite_difference(self):
        vt = power(0.4, 1.7)
        u = np.array([0.1, 0.3, 0.5, 0.8])
        h = 1e-6
        fd = (vt(u + h) - vt(u - h)) / (2 * h)
        assert_allclose(vt.derivative(u), fd, rtol=1e-6)


class TestPartialInverse:
    def test_linear(self):
        assert_allclose(linear(0.5).partial_inverse(0.4), 0.3, rtol=1e-14)
        assert linear(0.5).partial_inverse(1.0) == 0.0

    def test_power(self):
        # root of the forward example
        assert_allclose(power(0.5, 2.0).partial_inverse(0.625), 0.25, atol=1e-12)

    def test_right_root(self):
        vt = power(0.3, 2.5)
        y = np.linspace(0.01, 0.99, 25)
        assert_allclose(vt(vt.partial_inverse(y) + y), y, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(d=fulcrums, k=kappas, t=unit)
    def test_left_inverse(self, d, k, t):
        vt = power(d, k)
        u = t * d
        assert abs(vt.partial_inverse(vt(u)) - u) <= 1e-10

    def test_custom(self):
        grid = np.linspace(0, 1, 21)
        vt = custom(0.6, grid, np.sin(np.pi * grid / 2))
        u = np.linspace(0, 0.6, 31)
        assert_allclose(vt.partial_inverse(vt(u)), u, atol=1e-10)


class TestDelta:
    def test_linear_is_fulcrum(self):
        y = np.linspace(0, 1, 50)
        assert np.all(linear(0.3).delta(y) == 0.3)
        assert linear(0.5).delta(0.7) == 0.5

    def test_power_against_rejection_sampling(self):
        vt = power(0.5, 2.0)
        u = np.random.default_rng(11).random(4_000_000)
        y = vt(u)
        keep = np.abs(y - 0.5) < 0.005
        p = np.mean(u[keep] <= 0.5)
        se = np.sqrt(p * (1 - p) / keep.sum())
        assert abs(vt.delta(0.5) - p) < 2 * se + 2e-3

    @pytest.mark.parametrize("vt", _transforms(), ids=repr)
    def test_in_unit_interval(self, vt):
        d = vt.delta(np.linspace(0, 1, 41))
        assert np.all((d >= 0) & (d <= 1))


class TestStochasticInverse:
    def test_examples(self):
        vt = linear(0.5)
        assert vt.stochastic_inverse(0.0, 0.37) == 0.5
        assert_allclose(vt.stochastic_inverse(0.4, 0.2), 0.3, rtol=1e-14)
        assert_allclose(vt.stochastic_inverse(0.4, 0.9), 0.7, rtol=1e-14)

    def test_bad_coin(self):
        with pytest.raises(ValueError):
            linear(0.5).stochastic_inverse(0.4, 1.5)

    @settings(max_examples=100, deadline=None)
    @given(d=fulcrums, k=kappas, y=unit, c=unit)
    def test_round_trip(self, d, k, y, c):
        for vt in (linear(d), power(d, k)):
            assert abs(vt(vt.stochastic_inverse(y, c)) - y) <= 1e-12

    @pytest.mark.parametrize("vt", _transforms(), ids=repr)
    def test_uniformity(self, vt):
        rng = np.random.default_rng(5)
        y = rng.random(100_000)
        assert stats.kstest(vt.sample_inverse(y, rng), "uniform").pvalue > 0.01


@pytest.mark.parametrize("vt", _transforms(), ids=repr)
def test_serialisation_round_trip(vt):
    back = VTransform.from_dict(vt.to_dict())
    u = np.linspace(0, 1, 33)
    assert_allclose(back(u), vt(u), atol=0)


def test_flags():
    assert linear(0.5).is_symmetric and linear(0.4).is_linear
    assert not power(0.5, 2.0).is_linear
