"""Empirical spectral statistics of a coefficient panel.

The sample autocovariances per degree are

    Chat_l(tau) = 1 / (N (2l+1)) sum_{t=1..N} sum_m a_{l,m}(t-1+tau) a_{l,m}(t-1)

for tau in {0, 1} (so tau = 0 averages time indices 0..N-1), and the ratio
estimator is phihat_l = Chat_l(1) / Chat_l(0). The weighted sums

    Uhat(alpha)  = sum_l l^{-alpha}  (2l+1) Chat_l(1) * {1, -log l, log^2 l}
    Dhat(alpha)  = sum_l l^{-2alpha} (2l+1) Chat_l(0) * {1, -2 log l, 4 log^2 l}

are evaluated over the cached per-degree statistics, so repeated alpha
evaluations cost O(lmax). Within each degree the summation order is fixed
(m-major, then t), making all statistics deterministic.
"""

import numpy as np

from . import kernels


class DegeneratePanelError(ValueError):
    """Raised when a panel carries no power to normalize by."""


class _PanelStats:
    """Per-degree sums cached on the panel: c0, c1, power over t = 1..N."""

    def __init__(self, panel):
        lmax, n = panel.lmax, panel.n
        s00, s01, s11 = kernels.track_sums(panel.values)
        offsets = np.array([ell * ell - 1 for ell in range(1, lmax + 1)])
        counts = 2.0 * np.arange(1, lmax + 1) + 1.0
        self.lmax = lmax
        self.n = n
        # sample autocovariances, 1/(N (2l+1)) normalization
        self.c0 = np.add.reduceat(s00, offsets) / (n * counts)
        self.c1 = np.add.reduceat(s01, offsets) / (n * counts)
        # (1/N) sum_{t=1..N} sum_m a^2, per degree (enters the full objective)
        self.power = np.add.reduceat(s11, offsets) / n
        self.log_ells = np.log(np.arange(1, lmax + 1, dtype=float))
        self.counts = counts

    def pow_alpha(self, alpha, scale):
        return np.exp(-scale * alpha * self.log_ells)


def _stats(panel):
    if panel._stats is None:
        panel._stats = _PanelStats(panel)
    return panel._stats


def empirical_autocov(panel, ell, tau):
    """Sample autocovariance Chat_l(tau) of the degree-l tracks, tau in {0, 1}."""
    if not 1 <= ell <= panel.lmax:
        raise IndexError(f"degree {ell} outside 1..{panel.lmax}")
    if tau not in (0, 1):
        raise ValueError("only lags 0 and 1 are defined for the AR(1) estimator")
    st = _stats(panel)
    return float((st.c0 if tau == 0 else st.c1)[ell - 1])


def empirical_spectra(panel):
    """All per-degree sample autocovariances and ratio estimates.

    phi_hat entries are NaN wherever Chat_l(0) = 0.
    """
    st = _stats(panel)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(st.c0 > 0.0, st.c1 / np.where(st.c0 > 0.0, st.c0, 1.0), np.nan)
    return EmpiricalSpectra(panel.lmax, panel.n, st.c0.copy(), st.c1.copy(), phi_hat)


def u_hat(panel, alpha, order=0):
    """Lag-1 weighted sum Uhat(alpha) or its log-weighted derivatives.

    order 0 returns Uhat; order 1 adds a factor -log l; order 2 a factor
    +log^2 l.
    """
    st = _stats(panel)
    base = st.counts * st.c1 * st.pow_alpha(alpha, 1.0)
    return _apply_order(base, st.log_ells, order, u_family=True)


def d_hat(panel, alpha, order=0):
    """Lag-0 weighted sum Dhat(alpha) or its log-weighted derivatives.

    order 0 returns Dhat >= 0; order 1 adds a factor -2 log l; order 2 a
    factor +4 log^2 l.
    """
    st = _stats(panel)
    base = st.counts * st.c0 * st.pow_alpha(alpha, 2.0)
    return _apply_order(base, st.log_ells, order, u_family=False)


def _apply_order(base, log_ells, order, u_family):
    if order == 0:
        return float(np.sum(base))
    if order == 1:
        factor = -log_ells if u_family else -2.0 * log_ells
    elif order == 2:
        factor = log_ells**2 if u_family else 4.0 * log_ells**2
    else:
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    return float(np.sum(base * factor))


class EmpiricalSpectra:
    """Per-degree c0 = Chat_l(0), c1 = Chat_l(1) and phi_hat = c1/c0."""

    def __init__(self, lmax, n, c0, c1, phi_hat):
        self.lmax = lmax
        self.n = n
        self.c0 = c0
        self.c1 = c1
        self.phi_hat = phi_hat

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("ell,c0,c1,phi_hat\n")
            for i in range(self.lmax):
                ph = "" if np.isnan(self.phi_hat[i]) else f"{self.phi_hat[i]:.17g}"
                fh.write(f"{i + 1},{self.c0[i]:.17g},{self.c1[i]:.17g},{ph}\n")
