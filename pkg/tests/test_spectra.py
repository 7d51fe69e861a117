import numpy as np
import pytest

from sphar import (
    CoefficientPanel,
    d_hat,
    empirical_autocov,
    empirical_spectra,
    limit_series,
    u_hat,
)
from sphar.simulate import track_index

import oracles
from conftest import constant_panel, random_panel, sim_panel


class TestEmpiricalAutocov:
    def test_constant_panel(self):
        panel = constant_panel(lmax=3, n=10)
        for ell in (1, 2, 3):
            assert empirical_autocov(panel, ell, 0) == pytest.approx(1.0, rel=1e-14)
            assert empirical_autocov(panel, ell, 1) == pytest.approx(1.0, rel=1e-14)

    def test_alternating_panel(self):
        n, lmax = 11, 2
        values = np.tile((-1.0) ** np.arange(n + 1), (8, 1))
        panel = CoefficientPanel(lmax=lmax, n=n, values=values)
        assert empirical_autocov(panel, 1, 0) == pytest.approx(1.0, rel=1e-14)
        assert empirical_autocov(panel, 1, 1) == pytest.approx(-1.0, rel=1e-14)

    def test_hand_built_small_panel(self):
        values = np.array([[1.0, 2.0, -1.0],
                           [0.5, -0.25, 3.0],
                           [2.0, 1.0, 1.0]])
        panel = CoefficientPanel(lmax=1, n=2, values=values)
        for tau in (0, 1):
            assert empirical_autocov(panel, 1, tau) == pytest.approx(
                oracles.autocov_brute(panel, 1, tau), rel=1e-14)

    def test_out_of_range(self):
        panel = constant_panel(lmax=2, n=4)
        with pytest.raises(IndexError):
            empirical_autocov(panel, 3, 0)
        with pytest.raises(ValueError):
            empirical_autocov(panel, 1, 2)

    def test_matches_brute_on_random_panels(self):
        rng = np.random.default_rng(23)
        for trial in range(10):
            panel = random_panel(lmax=3, n=int(rng.integers(2, 9)), seed=100 + trial)
            for ell in (1, 2, 3):
                for tau in (0, 1):
                    assert empirical_autocov(panel, ell, tau) == pytest.approx(
                        oracles.autocov_brute(panel, ell, tau), rel=1e-12)


class TestEmpiricalSpectra:
    def test_ratio_estimator_consistent(self, theta0):
        from sphar import phi_ell

        panel = sim_panel(theta0, n=100_000, lmax=3, seed=41)
        spec = empirical_spectra(panel)
        for ell in (1, 2, 3):
            assert abs(spec.phi_hat[ell - 1] - phi_ell(theta0, ell)) < 0.02

    def test_zero_panel_undefined_ratio(self):
        panel = CoefficientPanel(lmax=2, n=4, values=np.zeros((8, 5)))
        spec = empirical_spectra(panel)
        assert np.all(spec.c0 == 0.0)
        assert np.all(spec.c1 == 0.0)
        assert np.all(np.isnan(spec.phi_hat))

    def test_constant_panel_ratio_one(self):
        spec = empirical_spectra(constant_panel(lmax=4, n=6))
        assert np.allclose(spec.phi_hat, 1.0)

    def test_csv_export(self, tmp_path):
        spec = empirical_spectra(constant_panel(lmax=2, n=4))
        path = tmp_path / "spectra.csv"
        spec.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "ell,c0,c1,phi_hat"
        assert len(lines) == 3
        assert lines[1].startswith("1,1,1,")

    def test_csv_nan_becomes_empty(self, tmp_path):
        panel = CoefficientPanel(lmax=1, n=3, values=np.zeros((3, 4)))
        path = tmp_path / "spectra.csv"
        empirical_spectra(panel).write_csv(path)
        assert path.read_text().splitlines()[1] == "1,0,0,"


class TestWeightedSums:
    def test_constant_panel_order0(self):
        panel = constant_panel(lmax=1, n=5)
        for alpha in (1.1, 2.0, 2.9):
            assert u_hat(panel, alpha) == pytest.approx(3.0, rel=1e-14)
            assert d_hat(panel, alpha) == pytest.approx(3.0, rel=1e-14)

    def test_lmax_one_log_orders_vanish(self):
        panel = random_panel(lmax=1, n=6, seed=3)
        assert u_hat(panel, 1.5, 1) == 0.0
        assert u_hat(panel, 1.5, 2) == 0.0
        assert d_hat(panel, 1.5, 1) == 0.0
        assert d_hat(panel, 1.5, 2) == 0.0

    def test_factorization_identity(self):
        # the cached-Chat evaluation equals the raw triple sum
        rng = np.random.default_rng(29)
        for trial in range(50):
            lmax = int(rng.integers(1, 5))
            n = int(rng.integers(2, 9))
            panel = random_panel(lmax=lmax, n=n, seed=500 + trial)
            alpha = float(rng.uniform(1.05, 3.0))
            assert u_hat(panel, alpha) == pytest.approx(
                oracles.u_hat_brute(panel, alpha), rel=1e-12, abs=1e-15)
            assert d_hat(panel, alpha) == pytest.approx(
                oracles.d_hat_brute(panel, alpha), rel=1e-12, abs=1e-15)

    def test_higher_orders_match_brute(self):
        rng = np.random.default_rng(31)
        for trial in range(10):
            panel = random_panel(lmax=3, n=4, seed=900 + trial)
            alpha = float(rng.uniform(1.1, 2.2))
            for order in (1, 2):
                assert u_hat(panel, alpha, order) == pytest.approx(
                    oracles.u_hat_brute(panel, alpha, order), rel=1e-12, abs=1e-15)
                assert d_hat(panel, alpha, order) == pytest.approx(
                    oracles.d_hat_brute(panel, alpha, order), rel=1e-12, abs=1e-15)

    def test_sign_structure(self):
        rng = np.random.default_rng(37)
        for trial in range(20):
            panel = random_panel(lmax=int(rng.integers(1, 6)), n=int(rng.integers(2, 10)),
                                 seed=700 + trial)
            alpha = float(rng.uniform(1.05, 3.0))
            assert d_hat(panel, alpha, 0) >= 0.0
            assert d_hat(panel, alpha, 1) <= 0.0
            assert d_hat(panel, alpha, 2) >= 0.0

    def test_alpha_derivative_consistency(self):
        # d/dalpha Uhat matches the order-1 sum; same one order up and for Dhat
        panel = random_panel(lmax=5, n=8, seed=61)
        h = 1e-5
        for alpha in (1.3, 1.9, 2.6):
            fd_u = (u_hat(panel, alpha + h) - u_hat(panel, alpha - h)) / (2 * h)
            assert fd_u == pytest.approx(u_hat(panel, alpha, 1), rel=1e-6)
            fd_u1 = (u_hat(panel, alpha + h, 1) - u_hat(panel, alpha - h, 1)) / (2 * h)
            assert fd_u1 == pytest.approx(u_hat(panel, alpha, 2), rel=1e-6)
            fd_d = (d_hat(panel, alpha + h) - d_hat(panel, alpha - h)) / (2 * h)
            assert fd_d == pytest.approx(d_hat(panel, alpha, 1), rel=1e-6)
            fd_d1 = (d_hat(panel, alpha + h, 1) - d_hat(panel, alpha - h, 1)) / (2 * h)
            assert fd_d1 == pytest.approx(d_hat(panel, alpha, 2), rel=1e-6)

    def test_bad_order(self):
        panel = constant_panel(lmax=1, n=4)
        with pytest.raises(ValueError):
            u_hat(panel, 1.5, 3)


class TestUnbiasedAtScale:
    def test_mean_tracks_population_series(self, theta0):
        # over replications the empirical sums center on the population ones
        n, lmax, reps = 500, 10, 200
        alpha0 = theta0.alpha
        us, ds = [], []
        for r in range(reps):
            panel = sim_panel(theta0, n=n, lmax=lmax, seed=10_000 + r)
            us.append(u_hat(panel, alpha0))
            ds.append(d_hat(panel, alpha0))
        for samples, kind in ((us, "U"), (ds, "D")):
            target = limit_series(theta0, alpha0, kind, lmax)
            mean = float(np.mean(samples))
            se = float(np.std(samples, ddof=1)) / np.sqrt(reps)
            assert abs(mean - target) < 3.0 * se
