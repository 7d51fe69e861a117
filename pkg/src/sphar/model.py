"""Parametric spectral model for the spherical AR(1) process.

The autoregressive operator has eigenvalues ``phi_l = G l^{-alpha}`` on the
degree-l harmonic subspace and the driving white noise has angular power
spectrum ``C_{l;Z} = H l^{-gamma}``, with ``0 < |G| < 1``, ``alpha > 1``,
``H > 0`` and ``gamma > 2``. Under these constraints every harmonic
coefficient is a stationary scalar AR(1) with lag-tau autocovariance

    C_l(tau) = C_{l;Z} / (1 - phi_l^2) * phi_l^{|tau|}.

This module also evaluates the deterministic series that drive the large-N
behaviour of the profiled least squares estimator (the U/D families and
their log-weighted derivatives), the limiting information and the
asymptotic variance of the smoothness estimate.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import kernels

SERIES_KINDS = ("U", "U1", "U2", "D", "D1", "D2")
DEFAULT_ELL_CAP = 10**7


class SeriesConvergenceError(RuntimeError):
    """Raised when an adaptive spectral series exceeds its degree cap."""


@dataclass(frozen=True)
class ParamSpace:
    """Admissible region for the smoothness parameter: alpha in [a1, a2]."""

    a1: float
    a2: float

    def __post_init__(self):
        if not (1.0 < self.a1 < self.a2 < math.inf):
            raise ValueError(f"need 1 < a1 < a2 < inf, got a1={self.a1}, a2={self.a2}")


@dataclass(frozen=True)
class ModelParams:
    """Model parameters (g, alpha, h, gamma) with an optional admissible region.

    When a ParamSpace is attached, alpha is validated against it; otherwise
    only alpha > 1 is required.
    """

    g: float
    alpha: float
    h: float
    gamma: float
    space: Optional[ParamSpace] = None

    def __post_init__(self):
        if not 0.0 < abs(self.g) < 1.0:
            raise ValueError(f"g must lie in (-1, 1) and be nonzero, got {self.g}")
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.space is not None and not self.space.a1 <= self.alpha <= self.space.a2:
            raise ValueError(
                f"alpha={self.alpha} outside attached space [{self.space.a1}, {self.space.a2}]")
        if not self.h > 0.0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not self.gamma > 2.0:
            raise ValueError(f"gamma must exceed 2, got {self.gamma}")

    def to_json_dict(self):
        return {
            "g": self.g,
            "alpha": self.alpha,
            "h": self.h,
            "gamma": self.gamma,
            "a1": self.space.a1 if self.space else None,
            "a2": self.space.a2 if self.space else None,
        }

    @classmethod
    def from_json_dict(cls, d):
        space = None
        if d.get("a1") is not None and d.get("a2") is not None:
            space = ParamSpace(float(d["a1"]), float(d["a2"]))
        return cls(float(d["g"]), float(d["alpha"]), float(d["h"]), float(d["gamma"]), space)

    def to_json(self):
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def phi_ell(params, ell):
    """Autoregressive eigenvalue phi_l = g l^{-alpha}; |phi_l| < 1 for l >= 1."""
    ells = np.asarray(ell, dtype=float)
    if np.any(ells < 1):
        raise ValueError("multipole must be a positive integer")
    out = params.g * np.exp(-params.alpha * np.log(ells))
    return float(out) if np.ndim(ell) == 0 else out


def noise_spectrum(params, ell):
    """Angular power spectrum of the driving noise, h l^{-gamma}."""
    ells = np.asarray(ell, dtype=float)
    if np.any(ells < 1):
        raise ValueError("multipole must be a positive integer")
    out = params.h * np.exp(-params.gamma * np.log(ells))
    return float(out) if np.ndim(ell) == 0 else out


def covariance_spectrum(params, ell, tau=0):
    """Stationary lag-tau autocovariance C_l(tau) of the degree-l coefficients."""
    phi = phi_ell(params, ell)
    c0 = noise_spectrum(params, ell) / (1.0 - phi * phi)
    out = c0 * phi ** abs(int(tau))
    return float(out) if np.ndim(ell) == 0 else out


class KernelValue(NamedTuple):
    value: float
    tail_bound: float


def covariance_kernel(params, inner, lag, lmax):
    """Truncated space-time covariance kernel at a given inner product and lag.

    Returns the degree-(1..lmax) partial sum of
    ``sum_l C_l(lag) (2l+1)/(4 pi) P_l(inner)`` together with an upper bound
    on the absolute truncation tail, ``sum_{l>lmax} (2l+1) C_l(0) / (4 pi)``.
    """
    if abs(inner) > 1.0:
        raise ValueError("inner product must lie in [-1, 1]")
    if lmax < 1:
        raise ValueError("lmax must be >= 1")
    ells = np.arange(1, lmax + 1, dtype=float)
    c = covariance_spectrum(params, ells, lag)
    p_table = kernels.legendre_table(np.array([float(inner)]), lmax)
    p_vals = p_table[1:, 0]
    value = float(np.sum(c * (2.0 * ells + 1.0) / (4.0 * math.pi) * p_vals))
    return KernelValue(value, _c0_tail(params, lmax))


def _c0_tail(params, lmax):
    """Truncation tail sum_{l > lmax} (2l+1) C_l(0) / (4 pi), to ~1e-9 relative.

    Terms up to the degree where phi_l^2 drops below 1e-10 are summed
    explicitly; past that the AR inflation factor is negligible and the
    remainder of sum (2l+1) h l^{-gamma} is a midpoint-rule integral.
    """
    g2, gamma = params.g**2, params.gamma
    cut = int(max(lmax + 1, 1000, math.ceil((g2 * 1e10) ** (1.0 / (2.0 * params.alpha)))))
    ells = np.arange(lmax + 1, cut + 1, dtype=float)
    explicit = float(np.sum((2.0 * ells + 1.0) * covariance_spectrum(params, ells, 0)))
    x = cut + 0.5
    remainder = params.h * (2.0 * x**(2.0 - gamma) / (gamma - 2.0)
                            + x**(1.0 - gamma) / (gamma - 1.0))
    return (explicit + remainder) / (4.0 * math.pi)


def _series_terms(params, alpha_eval, kind, ells):
    """Terms of the U/D families on an array of degrees."""
    log_ells = np.log(ells)
    if kind.startswith("U"):
        c = covariance_spectrum(params, ells, 1)
        base = (2.0 * ells + 1.0) * c * np.exp(-alpha_eval * log_ells)
        if kind == "U":
            return base
        if kind == "U1":
            return -base * log_ells
        if kind == "U2":
            return base * log_ells**2
    else:
        c = covariance_spectrum(params, ells, 0)
        base = (2.0 * ells + 1.0) * c * np.exp(-2.0 * alpha_eval * log_ells)
        if kind == "D":
            return base
        if kind == "D1":
            return -2.0 * base * log_ells
        if kind == "D2":
            return 4.0 * base * log_ells**2
    raise ValueError(f"unknown series kind {kind!r}, expected one of {SERIES_KINDS}")


def limit_series(params, alpha_eval, kind, lmax):
    """Deterministic expected-value series truncated at a fixed degree.

    kind selects among U (lag-1 weighted by l^{-alpha}), D (lag-0 weighted by
    l^{-2 alpha}) and their first/second log-weighted derivatives U1, U2, D1,
    D2. Model covariances are always evaluated at the true parameters in
    ``params``; ``alpha_eval`` is the point where the series is evaluated.
    """
    if alpha_eval <= 1.0:
        raise ValueError("series evaluation point must exceed 1")
    if lmax < 1:
        raise ValueError("lmax must be >= 1")
    total = 0.0
    for lo in range(1, lmax + 1, 2**20):
        hi = min(lo + 2**20, lmax + 1)
        ells = np.arange(lo, hi, dtype=float)
        total += float(np.sum(_series_terms(params, alpha_eval, kind, ells)))
    return total


def limit_series_converged(params, alpha_eval, kind, rel_tol=1e-10, ell_cap=DEFAULT_ELL_CAP):
    """Limit of the expected-value series, by doubling-window truncation.

    Degrees are added in windows of doubling width until a window contributes
    less than rel_tol times the running sum in absolute value. Raises
    SeriesConvergenceError beyond ell_cap.
    """
    value, _ = _converged_with_degree(params, alpha_eval, kind, rel_tol, ell_cap)
    return value


def _converged_with_degree(params, alpha_eval, kind, rel_tol, ell_cap=DEFAULT_ELL_CAP):
    if alpha_eval <= 1.0:
        raise ValueError("series evaluation point must exceed 1")
    if rel_tol <= 0.0:
        raise ValueError("rel_tol must be positive")
    total = 0.0
    lo = 1
    width = 64
    while lo <= ell_cap:
        hi = min(lo + width, ell_cap + 1)
        ells = np.arange(lo, hi, dtype=float)
        chunk = float(np.sum(_series_terms(params, alpha_eval, kind, ells)))
        total += chunk
        # first window always includes l = 1; start testing from the second
        if lo > 1 and abs(chunk) <= rel_tol * max(abs(total), 1e-300):
            return total, hi - 1
        lo = hi
        width *= 2
    raise SeriesConvergenceError(
        f"series {kind} at alpha={alpha_eval} did not converge below degree {ell_cap}")


def limiting_information(params, rel_tol=1e-10):
    """Curvature scale of the population objective at the true smoothness.

    Returns (g^2 / 2) (D'' - D'^2 / D) with all series evaluated at the true
    alpha. The bracket is nonnegative by Cauchy-Schwarz and strictly positive
    whenever more than one degree contributes.
    """
    a0 = params.alpha
    d = limit_series_converged(params, a0, "D", rel_tol)
    d1 = limit_series_converged(params, a0, "D1", rel_tol)
    d2 = limit_series_converged(params, a0, "D2", rel_tol)
    return params.g**2 / 2.0 * (d2 - d1 * d1 / d)


@dataclass(frozen=True)
class VarianceReport:
    sigma2: float
    sigma: float
    ell_max: int


def variance_report(params, rel_tol=1e-10):
    """Asymptotic variance of sqrt(N) (alpha_hat - alpha0), with diagnostics.

    sigma^2 = (4 / g^2) * S_num / S_den^2 where, with w_l = (2 log l + D'/D)^2
    l^{-2 alpha0} (2l+1) C_l(0),

        S_num = sum_l w_l C_{l;Z},      S_den = sum_l w_l,

    and S_den equals D'' - D'^2 / D. All sums run to the adaptive tolerance;
    ell_max records the largest degree reached.
    """
    a0 = params.alpha
    d, ld = _converged_with_degree(params, a0, "D", rel_tol)
    d1, ld1 = _converged_with_degree(params, a0, "D1", rel_tol)
    ratio = d1 / d

    def weighted(extra_fn, idx):
        total = 0.0
        lo = 1
        width = 64
        while lo <= DEFAULT_ELL_CAP:
            hi = min(lo + width, DEFAULT_ELL_CAP + 1)
            ells = np.arange(lo, hi, dtype=float)
            log_ells = np.log(ells)
            w = ((2.0 * log_ells + ratio)**2
                 * np.exp(-2.0 * a0 * log_ells)
                 * (2.0 * ells + 1.0) * covariance_spectrum(params, ells, 0))
            chunk = float(np.sum(w * extra_fn(ells)))
            total += chunk
            if lo > 1 and abs(chunk) <= rel_tol * max(abs(total), 1e-300):
                return total, hi - 1
            lo = hi
            width *= 2
        raise SeriesConvergenceError(f"variance series {idx} did not converge")

    num, ln = weighted(lambda ells: noise_spectrum(params, ells), "numerator")
    den, lden = weighted(lambda ells: 1.0, "denominator")
    sigma2 = 4.0 / params.g**2 * num / den**2
    return VarianceReport(sigma2, math.sqrt(sigma2), max(ld, ld1, ln, lden))


def asymptotic_variance(params, rel_tol=1e-10):
    """Asymptotic variance sigma^2 of sqrt(N) (alpha_hat - alpha0)."""
    return variance_report(params, rel_tol).sigma2
