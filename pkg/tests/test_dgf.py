import numpy as np
import pytest
from scipy import special as sc

import oracles
from bcsym import dgf
from bcsym.dgf import (
    BCLOI_CONST,
    DgfFamily,
    big_r,
    big_r_inverse,
    big_r_inverse_many,
    big_r_many,
    log_big_r,
    log_r,
    normalization_selfcheck,
    v,
)


class TestDgfFamily:
    def test_zeta_required(self):
        for tag in ("BCT", "BCPE", "BCHP", "BCSL", "BCSN"):
            with pytest.raises(ValueError):
                DgfFamily(tag)

    def test_zeta_forbidden(self):
        for tag in ("BCNO", "BCLOI", "BCLOII"):
            with pytest.raises(ValueError):
                DgfFamily(tag, 2.0)

    def test_bcpe_domain_is_closed_at_one(self):
        DgfFamily("BCPE", 1.0)
        with pytest.raises(ValueError):
            DgfFamily("BCPE", 0.5)

    def test_positive_zeta(self):
        with pytest.raises(ValueError):
            DgfFamily("BCT", 0.0)
        with pytest.raises(ValueError):
            DgfFamily("BCHP", -1.0)

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            DgfFamily("BCXX")


class TestLogR:
    def test_normal_at_zero(self):
        got = log_r(DgfFamily("BCNO"), 0.0)
        assert got == pytest.approx(np.log(1 / np.sqrt(2 * np.pi)), abs=1e-12)
        assert got == pytest.approx(-0.9189385, abs=1e-7)

    def test_logistic_ii_at_zero(self):
        assert log_r(DgfFamily("BCLOII"), 0.0) == pytest.approx(np.log(0.25), abs=1e-12)

    def test_logistic_i_at_zero(self):
        got = log_r(DgfFamily("BCLOI"), 0.0)
        assert got == pytest.approx(np.log(BCLOI_CONST / 4.0), abs=1e-12)

    def test_slash_zero_special_case(self):
        fam = DgfFamily("BCSL", 1.5)
        expect = np.log(1.5 / ((1.5 + 0.5) * np.sqrt(2 * np.pi)))
        assert log_r(fam, 0.0) == pytest.approx(expect, abs=1e-12)
        # continuity of the u > 0 branch into the special case
        assert log_r(fam, 1e-9) == pytest.approx(expect, abs=1e-8)

    def test_rejects_negative(self, family):
        with pytest.raises(ValueError):
            log_r(family, -0.5)

    def test_matches_scratch_generator(self, family):
        for z in (0.1, 0.7, 1.3, 2.4, 4.0):
            ref = float(oracles.mp_generator(family.tag, family.zeta)(z))
            got = np.exp(log_r(family, z * z))
            assert got == pytest.approx(ref, rel=1e-10)


class TestV:
    def test_normal_identically_one(self):
        fam = DgfFamily("BCNO")
        t = np.linspace(-5, 5, 11)
        assert np.all(v(fam, t) == 1.0)

    def test_bct_closed_form(self):
        assert v(DgfFamily("BCT", 4.0), 0.0) == pytest.approx(1.25, abs=1e-12)

    def test_bcloii_finite_limit_at_zero(self):
        fam = DgfFamily("BCLOII")
        h = 1e-5
        fd = -2 * (log_r(fam, h) - log_r(fam, 0.0)) / h
        assert v(fam, 0.0) == pytest.approx(0.5, abs=1e-9)
        assert v(fam, 0.0) == pytest.approx(fd, abs=1e-4)

    def test_even(self, family):
        rng = np.random.default_rng(5)
        t = rng.normal(0, 2, 30)
        assert np.allclose(v(family, t), v(family, -t), rtol=0, atol=0)

    def test_finite_difference_property(self, family):
        rng = np.random.default_rng(6)
        ts = rng.normal(0.0, 2.0, 50)
        for t in ts:
            u = t * t
            h = 1e-6 * max(1.0, u)
            lo = max(u - h, 0.0)
            fd = -2.0 * (log_r(family, u + h) - log_r(family, lo)) / (u + h - lo)
            an = v(family, t)
            assert an == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestBigR:
    def test_center(self, family):
        assert big_r(family, 0.0) == pytest.approx(0.5, abs=1e-8)

    def test_reflection(self, family):
        rng = np.random.default_rng(7)
        x = rng.normal(0, 2, 40)
        assert np.max(np.abs(big_r_many(family, -x)
                             - (1 - big_r_many(family, x)))) <= 1e-12

    def test_nondecreasing(self, family):
        x = np.linspace(-8, 8, 101)
        vals = big_r_many(family, x)
        assert np.all(np.diff(vals) >= 0)

    def test_infinite_surrogates(self, family):
        assert big_r(family, np.inf) == 1.0
        assert big_r(family, -np.inf) == 0.0

    def test_bcloii_is_logistic(self):
        fam = DgfFamily("BCLOII")
        assert big_r(fam, 1.0) == pytest.approx(1 / (1 + np.exp(-1)), abs=1e-12)
        x = np.linspace(-20, 20, 41)
        assert np.max(np.abs(big_r_many(fam, x) - sc.expit(x))) <= 1e-10

    def test_bcno_is_normal(self):
        fam = DgfFamily("BCNO")
        assert big_r(fam, 1.0) == pytest.approx(0.8413447, abs=1e-7)
        x = np.linspace(-8, 8, 33)
        assert np.max(np.abs(big_r_many(fam, x) - sc.ndtr(x))) <= 1e-14

    def test_bct_is_student_t_via_incomplete_beta(self):
        zeta = 4.0
        fam = DgfFamily("BCT", zeta)
        x = np.linspace(-10, 10, 41)
        ib = sc.betainc(zeta / 2, 0.5, zeta / (zeta + x ** 2))
        ref = np.where(x > 0, 1 - 0.5 * ib, 0.5 * ib)
        assert np.max(np.abs(big_r_many(fam, x) - ref)) <= 1e-10

    def test_quadrature_families_vs_mpmath(self):
        grid = [-6.0, -3.5, -2.0, -1.0, -0.4, 0.3, 0.9, 1.7, 2.8, 5.0]
        for tag, zeta in (("BCLOI", None), ("BCHP", 1.2), ("BCSL", 1.5)):
            fam = DgfFamily(tag, zeta)
            for x in grid:
                ref = oracles.mp_big_r(tag, zeta, x)
                assert big_r(fam, x) == pytest.approx(ref, rel=1e-8, abs=1e-12), (tag, x)

    def test_log_big_r_consistency(self, family):
        x = np.linspace(-6, 6, 25)
        got = np.exp(dgf.log_big_r_many(family, x))
        assert np.max(np.abs(got - big_r_many(family, x))) <= 1e-10

    def test_log_big_r_far_tail(self, family):
        # survival-side evaluation keeps log R meaningful where R rounds to 1
        val = log_big_r(family, 45.0)
        assert -1e-3 < val <= 0.0
        assert np.isfinite(val)


class TestBigRInverse:
    def test_median(self, family):
        assert big_r_inverse(family, 0.5) == 0.0

    def test_known_quantiles(self):
        assert big_r_inverse(DgfFamily("BCNO"), 0.975) == pytest.approx(1.959964, abs=1e-6)
        assert big_r_inverse(DgfFamily("BCLOII"), 0.9) == pytest.approx(np.log(9), abs=1e-10)

    def test_roundtrip(self, family):
        ps = np.array([1e-6, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99,
                       1 - 1e-4, 1 - 1e-6])
        x = big_r_inverse_many(family, ps)
        back = big_r_many(family, x)
        assert np.max(np.abs(back - ps)) <= 1e-9

    def test_domain(self, family):
        for p in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                big_r_inverse(family, p)


class TestNormalization:
    def test_selfcheck_within_tolerance(self, family):
        assert abs(normalization_selfcheck(family) - 1.0) <= 1e-6

    def test_bcloi_uses_printed_constant(self):
        # the constant is stored to the printed precision, so the integral
        # agrees to ~1e-9 rather than machine precision
        val = normalization_selfcheck(DgfFamily("BCLOI"))
        assert abs(val - 1.0) <= 1e-6
        assert abs(val - 1.0) > 1e-12

    def test_renormalized_bcsn(self):
        assert abs(normalization_selfcheck(DgfFamily("BCSN", 2.0)) - 1.0) <= 1e-6
