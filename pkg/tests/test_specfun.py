import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

import oracles
from bcsym import specfun
from bcsym.specfun import PrecisionPolicy


class TestPrecisionPolicy:
    def test_defaults(self):
        pol = PrecisionPolicy()
        assert pol.abs_tol == 1e-12 and pol.rel_tol == 1e-10
        assert pol.max_quadrature_subdivisions == 200

    @pytest.mark.parametrize("kwargs", [
        {"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_quadrature_subdivisions": 5},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PrecisionPolicy(**kwargs)


class TestStdNormalCdf:
    def test_center(self):
        assert specfun.std_normal_cdf(0.0) == 0.5

    def test_tail_saturation(self):
        assert abs(specfun.std_normal_cdf(40.0) - 1.0) <= 1e-15

    def test_quadrature_oracle(self):
        assert abs(specfun.std_normal_cdf(1.0) - 0.8413447461) < 5e-10
        assert abs(specfun.std_normal_cdf(1.0)
                   - oracles.normal_cdf_quadrature(1.0)) < 1e-14

    def test_reflection(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 3, 200)
        assert np.max(np.abs(specfun.std_normal_cdf(-x)
                             - (1 - specfun.std_normal_cdf(x)))) <= 1e-12

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            specfun.std_normal_cdf(np.inf)
        with pytest.raises(ValueError):
            specfun.std_normal_cdf(np.nan)


class TestStdNormalQuantile:
    def test_center(self):
        assert specfun.std_normal_quantile(0.5) == 0.0

    def test_third_quartile_vs_bisection(self):
        bis = oracles.normal_quantile_bisection(0.75, specfun.std_normal_cdf)
        got = specfun.std_normal_quantile(0.75)
        assert abs(got - 0.6744898) < 1e-7
        assert abs(got - bis) < 1e-12

    def test_roundtrip(self):
        assert abs(specfun.std_normal_quantile(0.8413447461) - 1.0) < 1e-9
        rng = np.random.default_rng(2)
        p = rng.uniform(1e-6, 1 - 1e-6, 100)
        assert np.max(np.abs(specfun.std_normal_cdf(
            specfun.std_normal_quantile(p)) - p)) <= 1e-12

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.1])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            specfun.std_normal_quantile(p)


class TestLogGamma:
    def test_known_values(self):
        assert specfun.log_gamma(1.0) == 0.0
        assert abs(specfun.log_gamma(0.5) - np.log(np.sqrt(np.pi))) < 1e-14
        assert abs(specfun.log_gamma(5.0) - np.log(24.0)) < 1e-13

    def test_against_mpmath_grid(self):
        for x in np.linspace(0.1, 50.0, 20):
            ref = float(mp.loggamma(mp.mpf(float(x))))
            assert abs(specfun.log_gamma(x) - ref) <= 1e-13 * max(1.0, abs(ref))

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.log_gamma(0.0)
        with pytest.raises(ValueError):
            specfun.log_gamma(-2.0)


class TestRegLowerIncompleteGamma:
    def test_exponential_cdf(self):
        assert abs(specfun.reg_lower_incomplete_gamma(1.0, 1.0)
                   - (1 - np.exp(-1))) < 1e-14

    def test_empty_integral(self):
        assert specfun.reg_lower_incomplete_gamma(2.0, 0.0) == 0.0

    def test_chi2_identity(self):
        # P(1/2, x) = 2 Phi(sqrt(2x)) - 1
        got = specfun.reg_lower_incomplete_gamma(0.5, 0.5)
        ref = 2 * specfun.std_normal_cdf(1.0) - 1
        assert abs(got - 0.6826895) < 1e-7
        assert abs(got - ref) < 1e-12

    def test_monotone_and_limits(self):
        xs = np.linspace(0.0, 60.0, 50)
        vals = specfun.reg_lower_incomplete_gamma(2.5, xs)
        assert np.all(np.diff(vals) >= 0)
        assert abs(vals[-1] - 1.0) < 1e-12

    def test_mpmath_grid(self):
        for a, x in [(0.3, 0.2), (0.5, 0.5), (1.0, 2.0), (2.0, 0.1),
                     (3.5, 3.5), (5.0, 10.0), (8.0, 4.0), (10.0, 10.0),
                     (0.7, 5.0), (1.5, 1.5), (2.5, 7.0), (4.0, 0.5),
                     (6.0, 6.0), (12.0, 9.0), (0.2, 1.0), (9.0, 20.0),
                     (15.0, 12.0), (20.0, 25.0), (0.9, 0.9), (7.0, 2.0)]:
            ref = float(mp.gammainc(a, 0, x, regularized=True))
            got = specfun.reg_lower_incomplete_gamma(a, x)
            assert abs(got - ref) <= 1e-8 * max(ref, 1e-30)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.reg_lower_incomplete_gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            specfun.reg_lower_incomplete_gamma(1.0, -1.0)


class TestRegIncompleteBeta:
    def test_uniform_cdf(self):
        x = np.linspace(0, 1, 11)
        assert np.max(np.abs(specfun.reg_incomplete_beta(1, 1, x) - x)) < 1e-14

    def test_endpoints(self):
        assert specfun.reg_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert specfun.reg_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_reflection(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.uniform(0.2, 5, 2)
            x = rng.uniform(0, 1)
            lhs = specfun.reg_incomplete_beta(a, b, x)
            rhs = 1 - specfun.reg_incomplete_beta(b, a, 1 - x)
            assert abs(lhs - rhs) <= 1e-12

    def test_quadrature_oracle(self):
        from scipy.special import betaln
        a, b, x = 0.5, 2.0, 0.25

        def dens(t):
            return np.exp((a - 1) * np.log(t) + (b - 1) * np.log1p(-t)
                          - betaln(a, b))

        ref, _ = integrate.quad(dens, 0, x, epsabs=1e-13, epsrel=1e-12)
        assert abs(specfun.reg_incomplete_beta(a, b, x) - ref) < 1e-10

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.reg_incomplete_beta(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            specfun.reg_incomplete_beta(1.0, 1.0, 1.5)


class TestBesselK1:
    def test_integral_representation(self):
        assert abs(specfun.bessel_k1(1.0) - 0.6019072) < 1e-7
        assert abs(specfun.bessel_k1(5.0) - 0.004044613) < 1e-9
        for x in np.linspace(0.1, 12.0, 20):
            ref = oracles.bessel_k1_integral(float(x))
            assert abs(specfun.bessel_k1(x) - ref) <= 1e-10 * ref

    def test_asymptotic_series(self):
        x = 20.0
        asym = np.sqrt(np.pi / (2 * x)) * np.exp(-x) * (1 + 3 / (8 * x))
        assert abs(specfun.bessel_k1(x) - asym) / asym < 0.01

    def test_monotone_decreasing_positive(self):
        xs = np.linspace(0.05, 30, 60)
        vals = specfun.bessel_k1(xs)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.bessel_k1(0.0)
        with pytest.raises(ValueError):
            specfun.bessel_k1(-1.0)


class TestNormalOrderStatMean:
    def test_single_observation(self):
        assert specfun.normal_order_stat_mean(1, 1) == 0.0
        assert specfun.normal_order_stat_mean(1, 1, exact=True) == pytest.approx(0.0, abs=1e-12)

    def test_median_symmetry(self):
        for n in (3, 5, 9, 21):
            i = (n + 1) // 2
            assert specfun.normal_order_stat_mean(i, n) == pytest.approx(0.0, abs=1e-13)

    def test_exact_minimum_of_five(self):
        got = specfun.normal_order_stat_mean(1, 5, exact=True)
        assert abs(got - (-1.16296)) < 5e-6
        assert abs(got - oracles.order_stat_mean_beta_form(1, 5)) < 1e-9

    def test_blom_tracks_exact(self):
        for i, n in [(1, 5), (2, 7), (3, 10), (1, 20), (10, 20)]:
            blom = specfun.normal_order_stat_mean(i, n)
            exact = specfun.normal_order_stat_mean(i, n, exact=True)
            assert abs(blom - exact) < 0.05

    def test_antisymmetry_and_monotonicity(self):
        n = 12
        vals = [specfun.normal_order_stat_mean(i, n) for i in range(1, n + 1)]
        for i in range(1, n + 1):
            assert vals[i - 1] == pytest.approx(-vals[n - i], abs=1e-12)
        assert np.all(np.diff(vals) > 0)

    def test_vectorized_matches_scalar(self):
        n = 8
        vec = specfun.normal_order_stat_means(n)
        scal = [specfun.normal_order_stat_mean(i, n) for i in range(1, n + 1)]
        assert np.allclose(vec, scal, atol=0, rtol=0)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.normal_order_stat_mean(0, 5)
        with pytest.raises(ValueError):
            specfun.normal_order_stat_mean(6, 5)
