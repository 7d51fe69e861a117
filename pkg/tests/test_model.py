import math

import numpy as np
import pytest

from sphar import (
    ModelParams,
    ParamSpace,
    asymptotic_variance,
    covariance_kernel,
    covariance_spectrum,
    legendre_p,
    limit_series,
    limit_series_converged,
    limiting_information,
    phi_ell,
    variance_report,
)
from sphar.model import SERIES_KINDS, SeriesConvergenceError

import oracles
from conftest import random_params


class TestParams:
    def test_valid(self):
        p = ModelParams(g=-0.8, alpha=1.5, h=2.0, gamma=3.5)
        assert p.g == -0.8

    @pytest.mark.parametrize("bad", [
        dict(g=0.0, alpha=1.5, h=1.0, gamma=3.0),
        dict(g=1.0, alpha=1.5, h=1.0, gamma=3.0),
        dict(g=0.5, alpha=1.0, h=1.0, gamma=3.0),
        dict(g=0.5, alpha=1.5, h=0.0, gamma=3.0),
        dict(g=0.5, alpha=1.5, h=1.0, gamma=2.0),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            ModelParams(**bad)

    def test_space_attachment(self):
        space = ParamSpace(1.2, 2.0)
        ModelParams(g=0.5, alpha=1.5, h=1.0, gamma=3.0, space=space)
        with pytest.raises(ValueError):
            ModelParams(g=0.5, alpha=2.5, h=1.0, gamma=3.0, space=space)
        with pytest.raises(ValueError):
            ParamSpace(0.9, 2.0)
        with pytest.raises(ValueError):
            ParamSpace(1.5, 1.2)

    def test_json_round_trip(self):
        p = ModelParams(g=0.12345678901234567, alpha=1.7182818284590452,
                        h=0.3141592653589793, gamma=2.718281828459045,
                        space=ParamSpace(1.1, 3.0))
        q = ModelParams.from_json(p.to_json())
        for a, b in [(p.g, q.g), (p.alpha, q.alpha), (p.h, q.h), (p.gamma, q.gamma),
                     (p.space.a1, q.space.a1), (p.space.a2, q.space.a2)]:
            assert abs(a - b) <= 1e-15 * abs(a)

    def test_json_without_space(self):
        p = ModelParams(g=0.5, alpha=5.0, h=1.0, gamma=3.0)
        d = p.to_json_dict()
        assert d["a1"] is None
        q = ModelParams.from_json_dict(d)
        assert q.space is None and q.alpha == 5.0


class TestSpectrum:
    def test_phi_ell_values(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        assert phi_ell(p, 1) == pytest.approx(0.5, abs=1e-15)
        assert phi_ell(p, 2) == pytest.approx(0.125, abs=1e-15)
        m = ModelParams(g=-0.8, alpha=1.5, h=1.0, gamma=3.0)
        assert phi_ell(m, 4) == pytest.approx(-0.1, abs=1e-15)

    def test_phi_ell_domain(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        with pytest.raises(ValueError):
            phi_ell(p, 0)

    def test_contraction(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_params(rng)
            ells = np.arange(1, 50)
            assert np.all(np.abs(phi_ell(p, ells)) < 1.0)

    def test_covariance_spectrum_examples(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        c0 = covariance_spectrum(p, 1, 0)
        assert c0 == pytest.approx(4.0 / 3.0, rel=1e-15)
        assert covariance_spectrum(p, 1, 1) == pytest.approx(c0 * 0.5, rel=1e-15)
        assert covariance_spectrum(p, 1, -2) == pytest.approx(c0 * 0.25, rel=1e-15)

    def test_negative_g_signs(self):
        p = ModelParams(g=-0.6, alpha=1.5, h=1.0, gamma=3.0)
        assert covariance_spectrum(p, 1, 1) < 0 < covariance_spectrum(p, 1, 0)
        assert covariance_spectrum(p, 1, 2) > 0


class TestCovarianceKernel:
    def test_single_term(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        inner = 0.37
        got = covariance_kernel(p, inner, 5, 1)
        expect = covariance_spectrum(p, 1, 5) * 3.0 / (4 * math.pi) * legendre_p(1, inner)
        assert got.value == pytest.approx(expect, rel=1e-14)

    def test_three_term_sum(self):
        # frozen from the 50-digit term-by-term oracle
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        got = covariance_kernel(p, 0.0, 0, 3)
        assert got.value == pytest.approx(-0.025262689379665926, rel=1e-13)
        # exact tail is 0.04837187998943700 at 50 digits; the reported bound
        # must cover it without being wildly loose
        assert 0.04837187998943700 <= got.tail_bound <= 0.0483719
        assert got.tail_bound == pytest.approx(0.04837187998943700, rel=1e-8)

    def test_point_variance(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        lmax = 6
        got = covariance_kernel(p, 1.0, 0, lmax)
        expect = sum(covariance_spectrum(p, ell, 0) * (2 * ell + 1) / (4 * math.pi)
                     for ell in range(1, lmax + 1))
        assert got.value == pytest.approx(expect, rel=1e-14)

    def test_domain(self):
        p = ModelParams(g=0.5, alpha=2.0, h=1.0, gamma=3.0)
        with pytest.raises(ValueError):
            covariance_kernel(p, 1.5, 0, 3)


class TestLimitSeries:
    def test_single_term_d(self, theta0):
        assert limit_series(theta0, 1.9, "D", 1) == pytest.approx(
            3.0 * covariance_spectrum(theta0, 1, 0), rel=1e-15)

    def test_single_term_d1_vanishes(self, theta0):
        assert limit_series(theta0, 1.9, "D1", 1) == 0.0

    def test_u_truncated_against_highprec(self, theta0):
        # frozen from the 50-digit summation oracle
        assert limit_series(theta0, 1.5, "U", 100) == pytest.approx(
            4.1851929052031056, rel=1e-12)
        assert limit_series(theta0, 1.7, "U", 200) == pytest.approx(
            4.1756603855891020, rel=1e-12)

    def test_all_kinds_match_oracle_smalltrunc(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            p = random_params(rng)
            a = float(rng.uniform(1.2, 2.5))
            for kind in SERIES_KINDS:
                assert limit_series(p, a, kind, 30) == pytest.approx(
                    oracles.series_reference(p, a, kind, 30), rel=1e-12, abs=1e-18)

    def test_converged_matches_big_fixed_sum(self, theta0):
        got = limit_series_converged(theta0, 1.5, "D", rel_tol=1e-10)
        reference = limit_series(theta0, 1.5, "D", 10**6)
        assert got == pytest.approx(reference, rel=1e-9)

    def test_d1_negative(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            p = random_params(rng)
            assert limit_series_converged(p, p.alpha, "D1", 1e-10) < 0.0

    def test_u_identity_at_true_alpha(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            p = random_params(rng)
            u = limit_series_converged(p, p.alpha, "U", 1e-12)
            d = limit_series_converged(p, p.alpha, "D", 1e-12)
            assert u == pytest.approx(p.g * d, rel=1e-10)

    def test_cap_raises(self, theta0):
        with pytest.raises(SeriesConvergenceError):
            limit_series_converged(theta0, 1.5, "D", rel_tol=1e-10, ell_cap=100)

    def test_bad_kind(self, theta0):
        with pytest.raises(ValueError):
            limit_series(theta0, 1.5, "X", 10)


class TestLimitingInformation:
    def test_degenerate_single_degree(self, theta0):
        # at truncation 1 every log factor vanishes
        d = limit_series(theta0, 1.5, "D", 1)
        d1 = limit_series(theta0, 1.5, "D1", 1)
        d2 = limit_series(theta0, 1.5, "D2", 1)
        assert theta0.g**2 / 2.0 * (d2 - d1**2 / d) == 0.0

    def test_reference_value(self, theta0):
        # frozen from the 50-digit oracle
        assert limiting_information(theta0, 1e-12) == pytest.approx(
            0.05801478104886080, rel=1e-11)

    def test_second_theta(self):
        p = ModelParams(g=-0.4, alpha=2.2, h=2.5, gamma=4.0)
        assert limiting_information(p, 1e-12) == pytest.approx(
            0.0065376125643824285, rel=1e-11)

    def test_h_homogeneity(self, theta0):
        doubled = ModelParams(g=0.7, alpha=1.5, h=2.0, gamma=3.0)
        assert limiting_information(doubled, 1e-12) == pytest.approx(
            2.0 * limiting_information(theta0, 1e-12), rel=1e-11)

    def test_positive(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            p = random_params(rng)
            assert limiting_information(p, 1e-10) > 0.0


class TestAsymptoticVariance:
    def test_reference_value(self, theta0):
        # frozen from the 50-digit oracle
        assert asymptotic_variance(theta0, 1e-12) == pytest.approx(
            3.6283400146129046, rel=1e-10)

    def test_halved_g(self):
        p = ModelParams(g=0.35, alpha=1.5, h=1.0, gamma=3.0)
        assert asymptotic_variance(p, 1e-12) == pytest.approx(
            16.261035214475084, rel=1e-10)

    def test_third_theta(self):
        p = ModelParams(g=-0.4, alpha=2.2, h=2.5, gamma=4.0)
        assert asymptotic_variance(p, 1e-12) == pytest.approx(
            45.834825276936872, rel=1e-10)

    def test_denominator_equals_information_bracket(self, theta0):
        # the weighted denominator series telescopes to D'' - D'^2 / D
        d = limit_series_converged(theta0, 1.5, "D", 1e-12)
        d1 = limit_series_converged(theta0, 1.5, "D1", 1e-12)
        d2 = limit_series_converged(theta0, 1.5, "D2", 1e-12)
        bracket = d2 - d1**2 / d
        report = variance_report(theta0, 1e-12)
        num = 4.0 / theta0.g**2 * _weighted_numerator(theta0, d1 / d)
        assert report.sigma2 == pytest.approx(num / bracket**2, rel=1e-9)

    def test_h_scale_invariance(self, theta0):
        scaled = ModelParams(g=0.7, alpha=1.5, h=3.0, gamma=3.0)
        assert asymptotic_variance(scaled, 1e-12) == pytest.approx(
            asymptotic_variance(theta0, 1e-12), rel=1e-9)

    def test_positive_finite(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            p = random_params(rng)
            s2 = asymptotic_variance(p, 1e-9)
            assert np.isfinite(s2) and s2 > 0.0

    def test_report_degree(self, theta0):
        report = variance_report(theta0)
        assert report.ell_max >= 64
        assert report.sigma == pytest.approx(math.sqrt(report.sigma2))


def _weighted_numerator(params, ratio, lmax=200000):
    ells = np.arange(1, lmax + 1, dtype=float)
    log_ells = np.log(ells)
    c0 = covariance_spectrum(params, ells, 0)
    w = (2.0 * log_ells + ratio)**2 * np.exp(-2.0 * params.alpha * log_ells) * (2 * ells + 1) * c0
    return float(np.sum(w * params.h * np.exp(-params.gamma * log_ells)))


class TestPopulationIdentities:
    def test_u_and_uprime_identities(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            p = random_params(rng)
            u = limit_series_converged(p, p.alpha, "U", 1e-12)
            u1 = limit_series_converged(p, p.alpha, "U1", 1e-12)
            d = limit_series_converged(p, p.alpha, "D", 1e-12)
            d1 = limit_series_converged(p, p.alpha, "D1", 1e-12)
            assert u == pytest.approx(p.g * d, rel=1e-10)
            assert u1 == pytest.approx(p.g / 2.0 * d1, rel=1e-10)

    def test_population_score_vanishes(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            p = random_params(rng)
            u = limit_series_converged(p, p.alpha, "U", 1e-12)
            u1 = limit_series_converged(p, p.alpha, "U1", 1e-12)
            d = limit_series_converged(p, p.alpha, "D", 1e-12)
            d1 = limit_series_converged(p, p.alpha, "D1", 1e-12)
            score = (-2.0 * u1 * u * d + d1 * u * u) / d**2
            scale = max(abs(2.0 * u1 * u / d), abs(d1 * u * u / d**2))
            assert abs(score) <= 1e-10 * scale

    def test_cauchy_schwarz_gap(self):
        rng = np.random.default_rng(15)
        lmax = 500
        for _ in range(5):
            p = random_params(rng, alpha_range=(1.4, 2.6))
            d0 = limit_series(p, p.alpha, "D", lmax)
            for a in np.linspace(1.2, 2.9, 13):
                cross = limit_series(p, a, "U", lmax) / p.g  # sum w_l l^{-a-a0}
                lhs = limit_series(p, a, "D", lmax) * d0
                if abs(a - p.alpha) < 1e-9:
                    assert lhs == pytest.approx(cross**2, rel=1e-12)
                else:
                    assert lhs > cross**2

    def test_v_monotone_both_sides(self):
        from sphar import diagnostic_v

        rng = np.random.default_rng(16)
        for _ in range(5):
            p = random_params(rng, alpha_range=(1.5, 2.5))
            a0 = p.alpha
            left = [diagnostic_v(p, a, a0, 200) for a in np.linspace(1.1, a0, 11)]
            right = [diagnostic_v(p, a, a0, 200) for a in np.linspace(a0, 3.0, 11)]
            assert all(x >= y - 1e-12 for x, y in zip(left, left[1:]))
            assert all(y >= x - 1e-12 for x, y in zip(right, right[1:]))
