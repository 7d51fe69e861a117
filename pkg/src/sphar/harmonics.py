"""Real spherical harmonics, Legendre polynomials and associated Legendre
functions.

Conventions
-----------
The associated Legendre function used throughout carries **no
Condon-Shortley phase**: its prefactor is ``+(1 - u^2)^{m/2}``. This differs
by ``(-1)^m`` from ``scipy.special.lpmv`` and from most physics texts. The
real spherical harmonics are

    Y_{l,m}(theta, phi) = sqrt((2l+1)/(2 pi) (l-m)!/(l+m)!) P_{l,m}(cos theta) cos(m phi)   m > 0
    Y_{l,0}(theta, phi) = sqrt((2l+1)/(4 pi)) P_l(cos theta)
    Y_{l,m}(theta, phi) = sqrt((2l+1)/(2 pi) (l+m)!/(l-m)!) P_{l,-m}(cos theta) sin(-m phi)  m < 0

which form an orthonormal basis of square-integrable functions on the
sphere. Normalization constants are evaluated in the log domain (lgamma) so
degrees up to a few hundred do not overflow; degrees beyond ~500 are out of
scope.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere in angular coordinates.

    colatitude in [0, pi]; longitude is normalized into [0, 2 pi).
    """

    colatitude: float
    longitude: float

    def __post_init__(self):
        if not 0.0 <= self.colatitude <= math.pi:
            raise ValueError(f"colatitude must lie in [0, pi], got {self.colatitude}")
        lon = math.fmod(self.longitude, 2.0 * math.pi)
        if lon < 0.0:
            lon += 2.0 * math.pi
        object.__setattr__(self, "longitude", lon)

    def inner(self, other):
        """Cosine of the angle between the two points, clipped to [-1, 1]."""
        c = (math.cos(self.colatitude) * math.cos(other.colatitude)
             + math.sin(self.colatitude) * math.sin(other.colatitude)
             * math.cos(self.longitude - other.longitude))
        return min(1.0, max(-1.0, c))


def _check_ell(ell):
    if ell < 0 or ell != int(ell):
        raise ValueError(f"degree must be a nonnegative integer, got {ell}")
    return int(ell)


def legendre_p(ell, u):
    """Legendre polynomial P_l(u) via the three-term recurrence.

    Parameters
    ----------
    ell : nonnegative int
    u : float or array-like with entries in [-1, 1]

    Returns
    -------
    float when u is scalar, else ndarray of the same shape.
    """
    ell = _check_ell(ell)
    arr = np.asarray(u, dtype=float)
    if np.any(np.abs(arr) > 1.0):
        raise ValueError("Legendre argument must lie in [-1, 1]")
    flat = np.atleast_1d(arr).ravel()
    table = kernels.legendre_table(flat, ell)
    vals = table[ell].reshape(np.atleast_1d(arr).shape)
    if arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(arr.shape)


def assoc_legendre(ell, m, u):
    """Associated Legendre function P_{l,m}(u), no Condon-Shortley phase.

    Computed by upward recurrence in l at fixed m, seeded with
    P_{m,m}(u) = (2m-1)!! (1-u^2)^{m/2}. The unnormalized values grow like
    (2m-1)!! and overflow double precision near l = m ~ 150; use
    ``real_sph_harm`` for normalized evaluation at high degree.
    """
    ell = _check_ell(ell)
    m = int(m)
    if m < 0 or m > ell:
        raise ValueError(f"order must satisfy 0 <= m <= l, got m={m}, l={ell}")
    if abs(u) > 1.0:
        raise ValueError("argument must lie in [-1, 1]")
    s = math.sqrt(max(0.0, 1.0 - u * u))
    pmm = 1.0
    for k in range(1, m + 1):
        pmm *= (2.0 * k - 1.0) * s
    if ell == m:
        return pmm
    pm1 = u * (2.0 * m + 1.0) * pmm
    if ell == m + 1:
        return pm1
    for k in range(m + 2, ell + 1):
        pmm, pm1 = pm1, ((2.0 * k - 1.0) * u * pm1 - (k + m - 1.0) * pmm) / (k - m)
    return pm1


def _colatitude_factor(ell, m_abs, colatitude):
    table = kernels.sph_norm_table(np.array([math.cos(colatitude)]), ell)
    return float(table[ell, m_abs, 0])


def real_sph_harm(ell, m, point):
    """Real spherical harmonic Y_{l,m} at a point, per the module conventions."""
    ell = _check_ell(ell)
    m = int(m)
    if abs(m) > ell:
        raise ValueError(f"order must satisfy |m| <= l, got m={m}, l={ell}")
    f = _colatitude_factor(ell, abs(m), point.colatitude)
    if m > 0:
        return f * math.cos(m * point.longitude)
    if m == 0:
        return f
    return f * math.sin(-m * point.longitude)


def ylm_matrix(colatitudes, longitudes, lmax):
    """Matrix of Y_{l,m} values for all (l, m) with 1 <= l <= lmax.

    Rows are ordered l-major with m ascending from -l to l (the coefficient
    panel layout); columns follow the input points. Returns shape
    (lmax*(lmax+2), n_points).
    """
    theta = np.ascontiguousarray(colatitudes, dtype=float)
    phi = np.ascontiguousarray(longitudes, dtype=float)
    if theta.shape != phi.shape or theta.ndim != 1:
        raise ValueError("colatitudes and longitudes must be 1-d arrays of equal length")
    if lmax < 1:
        raise ValueError("lmax must be >= 1")
    return kernels.ylm_matrix(theta, phi, lmax)


def addition_check(ell, x, y):
    """Residual sum_m Y_{l,m}(x) Y_{l,m}(y) - (2l+1)/(4 pi) P_l(<x, y>).

    Zero in exact arithmetic for every degree and point pair; used as a
    self-consistency diagnostic.
    """
    ell = _check_ell(ell)
    u = np.array([math.cos(x.colatitude), math.cos(y.colatitude)])
    table = kernels.sph_norm_table(u, ell)
    total = table[ell, 0, 0] * table[ell, 0, 1]
    for m in range(1, ell + 1):
        fx, fy = table[ell, m, 0], table[ell, m, 1]
        total += (fx * math.cos(m * x.longitude)) * (fy * math.cos(m * y.longitude))
        total += (fx * math.sin(m * x.longitude)) * (fy * math.sin(m * y.longitude))
    return total - (2.0 * ell + 1.0) / FOUR_PI * legendre_p(ell, x.inner(y))
