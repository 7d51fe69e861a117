"""Hot numeric kernels, each with a numba-jitted and a pure-numpy path.

The jitted path is used when numba imports successfully and the environment
variable ``SPHAR_NUMBA`` is not set to ``0``/``false``/``off``. Both paths are
written so that they produce the same floating point results operation for
operation (no fastmath, identical evaluation order per element).

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import math
import os

import numpy as np

_FOUR_PI = 4.0 * math.pi


def _numba_requested():
    return os.environ.get("SPHAR_NUMBA", "1").strip().lower() not in ("0", "false", "off")


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via SPHAR_NUMBA in tests
    njit = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and _numba_requested()


# ---------------------------------------------------------------------------
# AR(1) track recursion
# ---------------------------------------------------------------------------

def _ar1_recursion_np(phi, a0, eps):
    """Run a(t) = phi * a(t-1) + eps(t) for every track.

    phi, a0 have shape (n_tracks,); eps has shape (n_tracks, n). Returns the
    (n_tracks, n+1) array of states including the initial column a0.
    """
    n_tracks, n = eps.shape
    out = np.empty((n_tracks, n + 1))
    out[:, 0] = a0
    for t in range(1, n + 1):
        out[:, t] = phi * out[:, t - 1] + eps[:, t - 1]
    return out


def _ar1_recursion_loop(phi, a0, eps):
    n_tracks, n = eps.shape
    out = np.empty((n_tracks, n + 1))
    for i in range(n_tracks):
        out[i, 0] = a0[i]
        prev = a0[i]
        for t in range(1, n + 1):
            prev = phi[i] * prev + eps[i, t - 1]
            out[i, t] = prev
    return out


# ---------------------------------------------------------------------------
# Legendre polynomial table
# ---------------------------------------------------------------------------

def _legendre_table_np(u, lmax):
    """P_l(u_j) for l = 0..lmax via the three-term recurrence.

    u has shape (n,); returns shape (lmax+1, n).
    """
    n = u.shape[0]
    p = np.empty((lmax + 1, n))
    p[0] = 1.0
    if lmax >= 1:
        p[1] = u
    for ell in range(2, lmax + 1):
        p[ell] = ((2.0 * ell - 1.0) * u * p[ell - 1] - (ell - 1.0) * p[ell - 2]) / ell
    return p


def _legendre_table_loop(u, lmax):
    n = u.shape[0]
    p = np.empty((lmax + 1, n))
    for j in range(n):
        p[0, j] = 1.0
    if lmax >= 1:
        for j in range(n):
            p[1, j] = u[j]
    for ell in range(2, lmax + 1):
        for j in range(n):
            p[ell, j] = ((2.0 * ell - 1.0) * u[j] * p[ell - 1, j]
                         - (ell - 1.0) * p[ell - 2, j]) / ell
    return p


# ---------------------------------------------------------------------------
# Normalized associated Legendre table
# ---------------------------------------------------------------------------
#
# f[l, m] is the colatitude part of the real spherical harmonic:
#   Y_{l,m} = f[l, |m|](theta) * {cos(m phi) for m > 0, 1 for m = 0,
#                                 sin(|m| phi) for m < 0}.
# The diagonal seed is evaluated in the log domain (lgamma for the factorial
# ratio) so that degrees of a few hundred do not overflow; the upward
# recurrence in l at fixed m uses square-root-normalized coefficients and
# stays O(1) in magnitude.

def _sph_norm_table_np(u, lmax):
    """Normalized colatitude factors f[l, m] for l <= lmax, m <= l.

    u = cos(theta), shape (n,); returns shape (lmax+1, lmax+1, n), entries
    with m > l are zero.
    """
    n = u.shape[0]
    f = np.zeros((lmax + 1, lmax + 1, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s2 = np.log(np.maximum(1.0 - u * u, 0.0))  # 2 log sin(theta)
    f[0, 0] = 1.0 / math.sqrt(_FOUR_PI)
    for m in range(0, lmax + 1):
        if m >= 1:
            # log of K_m * sqrt((2m+1) (0)! / (2m)!) * (2m-1)!! with K_m = 1/sqrt(2 pi)
            log_c = (0.5 * (math.log(2.0 * m + 1.0) - math.log(2.0 * math.pi))
                     + 0.5 * math.lgamma(2.0 * m + 1.0)
                     - m * math.log(2.0) - math.lgamma(m + 1.0))
            f[m, m] = np.where(log_s2 == -np.inf, 0.0, np.exp(log_c + 0.5 * m * log_s2))
        if m + 1 <= lmax:
            f[m + 1, m] = math.sqrt(2.0 * m + 3.0) * u * f[m, m]
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((2.0 * ell + 1.0) * (2.0 * ell - 1.0)
                          / ((ell - m) * (ell + m)))
            b = -math.sqrt((2.0 * ell + 1.0) * (ell + m - 1.0) * (ell - m - 1.0)
                           / ((2.0 * ell - 3.0) * (ell - m) * (ell + m)))
            f[ell, m] = a * u * f[ell - 1, m] + b * f[ell - 2, m]
    return f


def _sph_norm_table_loop(u, lmax):
    n = u.shape[0]
    f = np.zeros((lmax + 1, lmax + 1, n))
    c00 = 1.0 / math.sqrt(_FOUR_PI)
    for j in range(n):
        f[0, 0, j] = c00
    for m in range(0, lmax + 1):
        if m >= 1:
            log_c = (0.5 * (math.log(2.0 * m + 1.0) - math.log(2.0 * math.pi))
                     + 0.5 * math.lgamma(2.0 * m + 1.0)
                     - m * math.log(2.0) - math.lgamma(m + 1.0))
            for j in range(n):
                s2 = 1.0 - u[j] * u[j]
                if s2 <= 0.0:
                    f[m, m, j] = 0.0
                else:
                    f[m, m, j] = math.exp(log_c + 0.5 * m * math.log(s2))
        if m + 1 <= lmax:
            c = math.sqrt(2.0 * m + 3.0)
            for j in range(n):
                f[m + 1, m, j] = c * u[j] * f[m, m, j]
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((2.0 * ell + 1.0) * (2.0 * ell - 1.0)
                          / ((ell - m) * (ell + m)))
            b = -math.sqrt((2.0 * ell + 1.0) * (ell + m - 1.0) * (ell - m - 1.0)
                           / ((2.0 * ell - 3.0) * (ell - m) * (ell + m)))
            for j in range(n):
                f[ell, m, j] = a * u[j] * f[ell - 1, m, j] + b * f[ell - 2, m, j]
    return f


# ---------------------------------------------------------------------------
# Real spherical harmonic evaluation matrix
# ---------------------------------------------------------------------------

def _ylm_matrix_np(theta, phi, lmax):
    """Y_{l,m}(theta_j, phi_j) for all tracks (l = 1..lmax, m = -l..l).

    Returns shape (lmax*(lmax+2), n); row order is l-major with m ascending
    from -l to l, matching the coefficient panel layout.
    """
    f = _sph_norm_table_np(np.cos(theta), lmax)
    n = theta.shape[0]
    out = np.empty((lmax * (lmax + 2), n))
    row = 0
    for ell in range(1, lmax + 1):
        for m in range(-ell, ell + 1):
            if m < 0:
                out[row] = f[ell, -m] * np.sin(-m * phi)
            elif m == 0:
                out[row] = f[ell, 0]
            else:
                out[row] = f[ell, m] * np.cos(m * phi)
            row += 1
    return out


def _ylm_matrix_loop(theta, phi, lmax):
    u = np.cos(theta)
    f = _sph_norm_table_jit(u, lmax)
    n = theta.shape[0]
    out = np.empty((lmax * (lmax + 2), n))
    row = 0
    for ell in range(1, lmax + 1):
        for m in range(-ell, ell + 1):
            if m < 0:
                for j in range(n):
                    out[row, j] = f[ell, -m, j] * math.sin(-m * phi[j])
            elif m == 0:
                for j in range(n):
                    out[row, j] = f[ell, 0, j]
            else:
                for j in range(n):
                    out[row, j] = f[ell, m, j] * math.cos(m * phi[j])
            row += 1
    return out


# ---------------------------------------------------------------------------
# Per-track sums for the sample autocovariances
# ---------------------------------------------------------------------------

def _track_sums_np(values):
    """Time sums per track: (sum_{t<n} v_t^2, sum v_t v_{t+1}, sum_{t>=1} v_t^2)."""
    head = values[:, :-1]
    tail = values[:, 1:]
    s00 = np.sum(head * head, axis=1)
    s01 = np.sum(head * tail, axis=1)
    s11 = np.sum(tail * tail, axis=1)
    return s00, s01, s11


def _track_sums_loop(values):
    n_tracks, n1 = values.shape
    s00 = np.zeros(n_tracks)
    s01 = np.zeros(n_tracks)
    s11 = np.zeros(n_tracks)
    for i in range(n_tracks):
        acc00 = 0.0
        acc01 = 0.0
        acc11 = 0.0
        for t in range(1, n1):
            prev = values[i, t - 1]
            cur = values[i, t]
            acc00 += prev * prev
            acc01 += prev * cur
            acc11 += cur * cur
        s00[i] = acc00
        s01[i] = acc01
        s11[i] = acc11
    return s00, s01, s11


# ---------------------------------------------------------------------------
# Path selection
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _ar1_recursion_jit = njit(cache=True)(_ar1_recursion_loop)
    _legendre_table_jit = njit(cache=True)(_legendre_table_loop)
    _sph_norm_table_jit = njit(cache=True)(_sph_norm_table_loop)
    _ylm_matrix_jit = njit(cache=True)(_ylm_matrix_loop)
    _track_sums_jit = njit(cache=True)(_track_sums_loop)
else:  # pragma: no cover
    _ar1_recursion_jit = None
    _legendre_table_jit = None
    _sph_norm_table_jit = None
    _ylm_matrix_jit = None
    _track_sums_jit = None

if USING_NUMBA:
    ar1_recursion = _ar1_recursion_jit
    legendre_table = _legendre_table_jit
    sph_norm_table = _sph_norm_table_jit
    ylm_matrix = _ylm_matrix_jit
    track_sums = _track_sums_jit
else:
    ar1_recursion = _ar1_recursion_np
    legendre_table = _legendre_table_np
    sph_norm_table = _sph_norm_table_np
    ylm_matrix = _ylm_matrix_np
    track_sums = _track_sums_np

# name -> (numpy path, jitted path or None); used by the benchmark and by
# the backend-equivalence tests
IMPLEMENTATIONS = {
    "ar1_recursion": (_ar1_recursion_np, _ar1_recursion_jit),
    "legendre_table": (_legendre_table_np, _legendre_table_jit),
    "sph_norm_table": (_sph_norm_table_np, _sph_norm_table_jit),
    "ylm_matrix": (_ylm_matrix_np, _ylm_matrix_jit),
    "track_sums": (_track_sums_np, _track_sums_jit),
}
