import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, optimize, stats

from garchmimic.garch import (GarchSpec, InnovationDist, NonStationaryError, SimulationOverflow,
                              check_stationarity, gaussian, innovation_cdf, innovation_pdf,
                              innovation_quantile, simulate, skew_t, student_t, tail_index)

DISTS = [gaussian(), student_t(4.0), student_t(2.5), skew_t(4.0, 0.8), skew_t(6.0, 1.3)]
IDS = ["gauss", "t4", "t2.5", "skewt4", "skewt6"]


@pytest.fixture(scope="module")
def arch_long():
    return simulate(GarchSpec(0.4, 0.6), 10_000_000, seed=0).x


class TestInnovations:
    def test_gaussian_pdf_at_zero(self):
        assert_allclose(innovation_pdf(gaussian(), 0.0), 1 / np.sqrt(2 * np.pi), rtol=1e-15)

    @pytest.mark.parametrize("dist", DISTS, ids=IDS)
    def test_standardised_by_quadrature(self, dist):
        mass = dist.expect(lambda x: 1.0)
        mean = dist.expect(lambda x: x)
        var = dist.expect(lambda x: x * x)
        assert_allclose([mass, mean, var], [1.0, 0.0, 1.0], atol=1e-6)

    @pytest.mark.parametrize("dist", [gaussian(), student_t(4.0), skew_t(4.0, 0.8)],
                             ids=["gauss", "t4", "skewt4"])
    def test_standardised_by_sampling(self, dist):
        x = dist.rvs(1_000_000, np.random.default_rng(0))
        assert abs(x.mean()) < 0.005
        assert abs(x.var() - 1) < 0.01

    @pytest.mark.parametrize("dist", DISTS, ids=IDS)
    def test_cdf_quantile(self, dist):
        p = np.linspace(0.001, 0.999, 50)
        q = innovation_quantile(dist, p)
        assert_allclose(innovation_cdf(dist, q), p, atol=1e-12)
        for x in (-2.0, 0.3, 1.7):
            val, _ = integrate.quad(lambda t: innovation_pdf(dist, t), -np.inf, x, epsabs=1e-12)
            assert_allclose(innovation_cdf(dist, x), val, atol=1e-9)

    @pytest.mark.parametrize("dist", DISTS, ids=IDS)
    def test_sampler_matches_cdf(self, dist):
        x = dist.rvs(100_000, np.random.default_rng(1))
        assert stats.kstest(x, lambda t: innovation_cdf(dist, t)).pvalue > 0.01

    def test_skew_direction(self):
        d = skew_t(4.0, 0.8)
        assert d.expect(lambda x: x ** 3) < 0
        assert not d.symmetric and student_t(4.0).symmetric

    def test_quantile_endpoints(self):
        with pytest.raises(ValueError):
            innovation_quantile(gaussian(), 0.0)
        with pytest.raises(ValueError):
            innovation_quantile(student_t(4.0), 1.0)

    @pytest.mark.parametrize("kw", [dict(law="cauchy"), dict(law="student_t", nu=2.0),
                                    dict(law="skew_t", nu=5.0, lam=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            InnovationDist(**kw)

    @pytest.mark.parametrize("dist", DISTS, ids=IDS)
    def test_dict_round_trip(self, dist):
        assert InnovationDist.from_dict(dist.to_dict()) == dist


class TestSpec:
    def test_volatility_function(self):
        s = GarchSpec(0.1, 0.3, 0.6, gamma1=0.2)
        assert_allclose(s.sigma2(-2.0, 1.5), 0.1 + 0.5 * 4 + 0.6 * 1.5)
        assert_allclose(s.sigma2(2.0, 1.5), 0.1 + 0.3 * 4 + 0.6 * 1.5)

    @pytest.mark.parametrize("kw", [dict(alpha0=0.0), dict(alpha0=1.0, alpha1=-0.1),
                                    dict(alpha0=1.0, beta1=0.5, phi=0.3),
                                    dict(alpha0=1.0, phi=1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            GarchSpec(**kw)

    def test_dict_round_trip(self):
        s = GarchSpec(0.4, 0.3, gamma1=0.4, innovations=skew_t(4.0, 0.8))
        assert GarchSpec.from_dict(s.to_dict()) == s


class TestStationarity:
    def test_pure_persistence(self):
        st = check_stationarity(GarchSpec(1.0, beta1=0.5))
        assert st.stationary
        assert_allclose(st.log_moment, np.log(0.5))

    def test_arch_threshold(self):
        assert not check_stationarity(GarchSpec(0.4, 3.6))
        assert check_stationarity(GarchSpec(0.4, 3.5))
        root = optimize.brentq(lambda a: check_stationarity(GarchSpec(1.0, a)).log_moment, 3.0, 4.0)
        # 2 exp(euler gamma), the Gaussian ARCH(1) boundary
        assert_allclose(root, 2 * np.exp(np.euler_gamma), rtol=1e-8)

    def test_nonstationary_simulation_refused(self):
        with pytest.raises(NonStationaryError):
            simulate(GarchSpec(0.4, 3.6), 10)

    def test_overflow_reported(self):
        with pytest.raises(SimulationOverflow):
            simulate(GarchSpec(0.4, 12.0), 100_000, seed=1, check=False)


def _t_abs_moment(nu, z):
    # E|eps|^z for the unit-variance t law
    nu, z = mpmath.mpf(nu), mpmath.mpf(z)
    raw = nu ** (z / 2) * mpmath.gamma((z + 1) / 2) * mpmath.gamma((nu - z) / 2) / (
        mpmath.sqrt(mpmath.pi) * mpmath.gamma(nu / 2))
    return raw * ((nu - 2) / nu) ** (z / 2)


def _gauss_abs_moment(z):
    z = mpmath.mpf(z)
    return 2 ** (z / 2) * mpmath.gamma((z + 1) / 2) / mpmath.sqrt(mpmath.pi)


class TestTailIndex:
    # frozen values from the closed-form moment equations solved with mpmath
    def _arch_oracle(self, alpha1, moment):
        return float(mpmath.findroot(lambda z: alpha1 ** (z / 2) * moment(z) - 1, 3.0))

    def test_gaussian_arch(self):
        ref = self._arch_oracle(0.6, _gauss_abs_moment)
        assert_allclose(tail_index(GarchSpec(0.4, 0.6)), ref, atol=1e-8)
        assert abs(ref - 3.82) < 0.02

    def test_t4_arch(self):
        ref = self._arch_oracle(0.6, lambda z: _t_abs_moment(4, z))
        assert_allclose(tail_index(GarchSpec(0.4, 0.6, innovations=student_t(4.0))), ref, atol=1e-8)
        assert abs(ref - 2.76) < 0.02

    def test_t25_arch(self):
        ref = float(mpmath.findroot(lambda z: 0.6 ** (z / 2) * _t_abs_moment(2.5, z) - 1, 2.2))
        got = tail_index(GarchSpec(0.4, 0.6, innovations=student_t(2.5)))
        assert_allclose(got, ref, atol=1e-8)
        assert_allclose(got, 2.2265, atol=1e-4)

    def test_garch(self):
        def moment(z):
            f = lambda e: (0.3 * e * e + 0.6) ** (z / 2) * mpmath.npdf(e)
            return mpmath.quad(f, [-mpmath.inf, 0, mpmath.inf])
        ref = float(mpmath.findroot(lambda z: moment(z) - 1, 4.0))
        assert_allclose(tail_index(GarchSpec(0.1, 0.3, 0.6)), ref, atol=1e-7)
        assert abs(ref - 4.09) < 0.03

    def test_leverage_equals_averaged_slope(self):
        # symmetric innovations: the leverage term acts as half its size on each side
        lev = tail_index(GarchSpec(0.4, 0.3, gamma1=0.4))
        m = lambda z: 0.5 * (0.3 ** (z / 2) + 0.7 ** (z / 2)) * _gauss_abs_moment(z) - 1
        assert_allclose(lev, float(mpmath.findroot(m, 3.0)), atol=1e-8)

    def test_needs_arch_term(self):
        with pytest.raises(ValueError):
            tail_index(GarchSpec(1.0, beta1=0.5))

    def test_hill_estimate(self, arch_long):
        a = np.sort(np.abs(arch_long))[::-1]
        k = a.size // 1000
        hill = 1.0 / np.mean(np.log(a[:k] / a[k]))
        zeta = tail_index(GarchSpec(0.4, 0.6))
        assert abs(hill / zeta - 1) < 0.15


class TestSimulation:
    def test_iid_case(self):
        r = simulate(GarchSpec(2.5), 200_000, seed=3)
        assert_allclose(r.sigma, np.sqrt(2.5))
        assert abs(r.x.var() - 2.5) < 4 * 2.5 * np.sqrt(2 / 200_000)

    def test_arch_unit_variance(self, arch_long):
        assert abs(arch_long.var() - 1) < 0.01

    def test_garch_unit_variance(self):
        x = simulate(GarchSpec(0.1, 0.3, 0.6), 10_000_000, seed=0).x
        assert abs(x.var() - 1) < 0.02

    def test_shapes_and_determinism(self):
        s = GarchSpec(0.1, 0.3, 0.6, innovations=student_t(5.0))
        a, b = simulate(s, 500, burn_in=50, seed=9), simulate(s, 500, burn_in=50, seed=9)
        assert a.x.shape == a.sigma.shape == (500,)
        assert np.array_equal(a.x, b.x)

    def test_sigma_follows_recursion(self):
        s = GarchSpec(0.2, 0.25, 0.5, gamma1=0.3)
        r = simulate(s, 1000, seed=2)
        assert_allclose(r.sigma[1:] ** 2, s.sigma2(r.x[:-1], r.sigma[:-1] ** 2), rtol=1e-12)

    def test_symmetric_lag_one_tau(self):
        x = simulate(GarchSpec(0.4, 0.6, innovations=student_t(4.0)), 200_000, seed=4).x
        tau = np.array([stats.kendalltau(b[:-1], b[1:])[0] for b in np.array_split(x, 20)])
        se = tau.std(ddof=1) / np.sqrt(tau.size)
        assert abs(stats.kendalltau(x[:-1], x[1:])[0]) < 3 * se

    def test_squared_acf_decay(self):
        alpha1, beta1 = 0.1, 0.85
        x2 = simulate(GarchSpec(0.05, alpha1, beta1), 5_000_000, seed=5).x ** 2
        y = x2 - x2.mean()
        lags = np.arange(1, 11)
        acf = np.array([np.dot(y[:-k], y[k:]) for k in lags]) / np.dot(y, y)
        slope = np.polyfit(lags, np.log(acf), 1)[0]
        assert abs(slope - np.log(alpha1 + beta1)) < 0.1

    def test_ar_arch_moments(self):
        phi = 0.5
        x = simulate(GarchSpec(0.5, 0.3, phi=phi), 1_000_000, seed=6).x
        assert abs(x.mean()) < 4 * x.std() / np.sqrt(x.size) * np.sqrt((1 + phi) / (1 - phi))
        assert abs(np.corrcoef(x[:-1], x[1:])[0, 1] - phi) < 0.01
