import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from garchmimic.garch import GarchSpec, gaussian, skew_t, student_t
from garchmimic.implied import (CopulaGrid, ImpliedModel, estimate_sigma_density,
                                implied_model, implied_v_transform_leverage,
                                independence_distance, joint_density, open_grid,
                                solve_arch_marginal, symmetry_report)

ARCH = GarchSpec(0.4, 0.6)
ARCH_T4 = GarchSpec(0.4, 0.6, innovations=student_t(4.0))
LEVERAGE = GarchSpec(0.4, 0.3, gamma1=0.4)
SKEW = GarchSpec(0.4, 0.6, innovations=skew_t(4.0, 0.8))
AR_ARCH = GarchSpec(0.5, 0.3, phi=0.5)
GARCH = GarchSpec(0.1, 0.3, 0.6)
IID = GarchSpec(0.7)

# rows/columns where point values resolve the density (see margin tests)
BAND = slice(25, 175)


def stationary_draws(alpha0, alpha1, n, seed, steps=60):
    # independent stationary ARCH(1) draws from parallel paths
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    for _ in range(steps):
        x = np.sqrt(alpha0 + alpha1 * x * x) * rng.standard_normal(n)
    return x


def test_open_grid():
    assert_allclose(open_grid(4), [0.125, 0.375, 0.625, 0.875])


class TestArchMarginal:
    def test_iid_limit(self):
        d = solve_arch_marginal(IID, m=801)
        x = np.linspace(-4, 4, 101)
        s = np.sqrt(0.7)
        assert np.max(np.abs(d.pdf(x) - stats.norm.pdf(x / s) / s)) < 1e-4

    @pytest.mark.parametrize("spec", [ARCH, ARCH_T4, SKEW, AR_ARCH, LEVERAGE],
                             ids=["gauss", "t4", "skewt", "ar", "leverage"])
    def test_grid_invariants(self, spec):
        d = implied_model(spec).marginal
        assert abs(d.integrate() - 1) < 1e-6
        assert np.all(np.diff(d.cdf_values) >= 0)
        assert d.cdf_values[0] < 1e-8 and d.cdf_values[-1] > 1 - 1e-8
        x = np.linspace(-5, 5, 41)
        assert_allclose(d.ppf(d.cdf(x)), x, atol=1e-8)
        assert_allclose(d.ppf(d.cdf(x), exact=False), x, atol=1e-3)
        assert d.boundary_mass() < 1e-8

    def test_unit_variance(self):
        d = implied_model(ARCH).marginal
        assert abs(d.variance() - 1) < 0.005
        assert abs(d.integrate(d.nodes ** 2) - 1) < 0.005

    def test_matches_independent_draws(self):
        d = implied_model(ARCH).marginal
        x = stationary_draws(0.4, 0.6, 2_000_000, seed=1)
        k = 100
        counts = np.bincount(np.searchsorted(d.ppf(np.arange(1, k) / k), x), minlength=k)
        expected = x.size / k
        chi2 = np.sum((counts - expected) ** 2 / expected)
        assert chi2 < stats.chi2.ppf(0.99, k - 1)

    def test_fixed_point_of_kernel(self):
        # f(x) = int f_eps(x / sigma(y)) / sigma(y) f(y) dy at a few points
        d = implied_model(ARCH_T4).marginal
        eps = ARCH_T4.innovations
        for x in (-3.0, 0.0, 0.4, 7.0):
            def integrand(y):
                s = ARCH_T4.sigma(y)
                return eps.pdf(x / s) / s * d.pdf(y)
            val, _ = integrate.quad(integrand, -np.inf, np.inf, limit=400, epsabs=1e-13)
            assert_allclose(val, d.pdf(x), rtol=1e-6)

    def test_heavy_tail_grid_has_no_boundary_mass(self):
        d = implied_model(GarchSpec(0.4, 0.6, innovations=student_t(2.5))).marginal
        assert d.boundary_mass() < 1e-8
        assert abs(d.integrate() - 1) < 1e-6

    def test_requires_arch(self):
        with pytest.raises(ValueError):
            solve_arch_marginal(GARCH)

    def test_quantile_bounds(self):
        with pytest.raises(ValueError):
            implied_model(ARCH).marginal.ppf(1.0)


class TestSigmaDensity:
    def test_requires_garch(self):
        with pytest.raises(ValueError):
            estimate_sigma_density(ARCH)

    def test_moments_and_support(self):
        sd = implied_model(GARCH).sigma_density
        assert_allclose(sd.weights.sum(), 1.0, rtol=1e-12)
        assert abs(sd.expect(lambda s: s * s) - 1) < 0.02
        assert sd.nodes.min() >= sd.sigma_min
        assert sd.pdf(np.array([0.9 * sd.sigma_min]))[0] == 0
        s = np.linspace(sd.sigma_min, 6, 20001)
        assert abs(integrate.trapezoid(sd.pdf(s), s) - 1) < 0.01

    def test_marginal_variance(self):
        d = implied_model(GARCH).marginal
        assert abs(d.integrate() - 1) < 1e-6
        assert abs(d.variance() - 1) < 0.02


class TestJointDensity:
    def test_iid_is_product(self):
        x, y = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-2, 2, 9))
        m = implied_model(IID)
        assert_allclose(joint_density(IID, x, y), m.marginal.pdf(x) * m.marginal.pdf(y),
                        rtol=1e-12)

    def test_joint_symmetry(self):
        x, y = np.meshgrid(np.linspace(-4, 4, 17), np.linspace(-3, 5, 17))
        f = joint_density(ARCH, x, y)
        assert_allclose(joint_density(ARCH, -x, -y), f, atol=1e-10)
        assert_allclose(joint_density(ARCH, x, -y), f, atol=1e-10)

    def test_integrates_to_one(self):
        t = np.linspace(-4.5, 4.5, 3601)
        x = 40 * np.sinh(t) / np.sinh(4.5)
        f = joint_density(ARCH, x[:, None], x[None, :])
        total = integrate.trapezoid(integrate.trapezoid(f, x, axis=1), x)
        assert abs(total - 1) < 1e-3

    def test_garch_margin(self):
        m = implied_model(GARCH)
        x = np.array([-1.5, 0.2, 2.0])
        t = np.linspace(-30, 30, 30001)
        f = m.joint_density(x[:, None], t[None, :])
        assert_allclose(integrate.trapezoid(f, t, axis=1), m.marginal.pdf(x), rtol=1e-4)


class TestCopulaC1:
    def test_iid_is_independence(self):
        u, v = np.meshgrid(open_grid(20), open_grid(20))
        assert_allclose(implied_model(IID).c1(u, v), 1.0, atol=1e-8)

    def test_symmetric_arch_grid(self):
        g = implied_model(ARCH).c1_grid(100)
        rep = symmetry_report(g)
        assert max(rep["h_sym"], rep["v_sym"], rep["radial"]) < 1e-6
        assert rep["exchangeable"] > 0.05

    def test_pointwise_matches_grid(self):
        m = implied_model(ARCH_T4)
        g = m.c1_grid(40)
        u, v = np.meshgrid(g.u, g.u, indexing="ij")
        assert_allclose(m.c1(u, v), g.values, rtol=1e-8)

    def test_leverage_only_h_symmetric(self):
        rep = symmetry_report(implied_model(LEVERAGE).c1_grid(100))
        assert rep["h_sym"] < 1e-6
        assert rep["v_sym"] > 0.05 and rep["radial"] > 0.05

    def test_skew_breaks_everything(self):
        rep = symmetry_report(implied_model(SKEW).c1_grid(100))
        assert min(rep.values()) > 0.02

    def test_ar_arch_only_radial(self):
        rep = symmetry_report(implied_model(AR_ARCH).c1_grid(100))
        assert rep["radial"] < 1e-3
        assert rep["h_sym"] > 0.02 and rep["v_sym"] > 0.02

    def test_absolute_value_copula_identity(self):
        # c1(u, v) = c*(|2u-1|, |2v-1|) with c* the copula of (|X1|, |X2|)
        m = implied_model(ARCH)
        f, q = m.marginal.pdf, m.marginal.ppf
        a = np.linspace(0.02, 0.98, 25)
        s = q((1 + a) / 2)
        ss, tt = np.meshgrid(s, s, indexing="ij")
        pair = sum(m.joint_density(i * ss, j * tt) for i in (1, -1) for j in (1, -1))
        cstar = pair / (4 * f(ss) * f(tt))
        u_left = (1 - a) / 2
        u, v = np.meshgrid(u_left, (1 + a) / 2, indexing="ij")
        assert np.max(np.abs(m.c1(u, v) - cstar)) < 1e-3

    @pytest.mark.parametrize("spec", [ARCH, ARCH_T4, LEVERAGE, SKEW, AR_ARCH],
                             ids=["gauss", "t4", "leverage", "skewt", "ar"])
    def test_margins_interior(self, spec):
        g = implied_model(spec).c1_grid()
        rows, cols = g.margins()
        assert np.all(g.values >= 0)
        assert np.max(np.abs(rows[BAND] - 1)) < 1e-3
        assert np.max(np.abs(cols[BAND] - 1)) < 1e-3

    def test_margins_edge_rows_by_quadrature(self):
        m = implied_model(ARCH)
        u = open_grid(200)[[0, 1, -1]]
        for ui in u:
            x = m.marginal.ppf(ui)
            # integrating the conditional density over y is the exact row margin
            val, _ = integrate.quad(lambda y: m.joint_density(x, y) / m.marginal.pdf(x),
                                    -np.inf, np.inf, limit=400)
            assert abs(val - 1) < 1e-6

    def test_garch_margins(self):
        g = implied_model(GARCH).c1_grid()
        rows, cols = g.margins()
        assert np.max(np.abs(rows[10:-10] - 1)) < 5e-3
        assert np.max(np.abs(cols[10:-10] - 1)) < 5e-3

    def test_distance_shrinks_with_alpha1(self):
        d = [independence_distance(implied_model(GarchSpec(1 - a, a)).c1_grid(100))
             for a in (0.6, 0.3, 0.1)]
        assert d[0] > d[1] > d[2] > 0


class TestConditionalC2:
    def test_arch_is_independence(self):
        u, v = np.meshgrid(open_grid(10), open_grid(10))
        assert_allclose(implied_model(ARCH).c2(u, v, 0.3), 1.0)
        assert_allclose(implied_model(ARCH).c2_grid(0.6, 10).values, 1.0)

    def test_garch_symmetries(self):
        g = implied_model(GARCH).c2_grid(0.5)
        rep = symmetry_report(g)
        assert rep["h_sym"] < 1e-3 and rep["v_sym"] < 1e-3
        rows, cols = g.margins()
        assert np.max(np.abs(rows[1:-1] - 1)) < 5e-3
        assert np.max(np.abs(cols[1:-1] - 1)) < 5e-3

    def test_pointwise_matches_grid(self):
        m = implied_model(GARCH)
        g = m.c2_grid(0.7, 12)
        u, v = np.meshgrid(g.u, g.u, indexing="ij")
        assert_allclose(m.c2(u, v, 0.7), g.values, rtol=1e-8)

    def test_unreliable_region_warns(self):
        with pytest.warns(UserWarning, match="unreliable"):
            implied_model(GARCH).c2(0.5, 0.5, 0.01)


class TestDiagnostics:
    def test_independence_grid(self):
        g = CopulaGrid(open_grid(50), np.ones((50, 50)))
        assert independence_distance(g) == 0
        assert all(v == 0 for v in symmetry_report(g).values())

    def test_distance_is_mean_abs_deviation(self):
        vals = np.array([[2.0, 0.0], [0.5, 1.5]])
        assert independence_distance(CopulaGrid(open_grid(2), vals)) == 0.75


class TestLeverageVTransform:
    def test_symmetric_case(self):
        u = np.linspace(0, 1, 201)
        got = implied_v_transform_leverage(ARCH, u)
        assert np.max(np.abs(got - np.abs(2 * u - 1))) < 1e-4

    def test_endpoints(self):
        v = implied_v_transform_leverage(LEVERAGE, np.array([0.0, 1e-9, 0.5, 1 - 1e-9, 1.0]))
        assert v[2] == pytest.approx(0, abs=1e-8)
        assert_allclose(v[[0, 1, 3, 4]], 1.0, atol=1e-6)

    def test_asymmetric_and_uniformity_preserving(self):
        u = np.random.default_rng(2).random(100_000)
        v = implied_v_transform_leverage(LEVERAGE, u)
        assert stats.kstest(v, "uniform").pvalue > 0.01
        fulcrum_side = implied_v_transform_leverage(LEVERAGE, np.array([0.3, 0.7]))
        assert abs(fulcrum_side[0] - fulcrum_side[1]) > 0.01

    def test_needs_arch(self):
        with pytest.raises(ValueError):
            implied_v_transform_leverage(SKEW, 0.3)


def test_model_is_reused():
    assert implied_model(ARCH) is implied_model(ARCH)
    assert isinstance(implied_model(ARCH), ImpliedModel)
