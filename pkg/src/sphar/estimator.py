"""Profiled nonlinear least squares estimation of (g, alpha).

The full objective over one panel is

    R(g, alpha) = (1/N) sum_{t=1..N} sum_{l,m} (a_{l,m}(t) - g l^{-alpha} a_{l,m}(t-1))^2,

minimized in g at the closed form g*(alpha) = Uhat(alpha) / Dhat(alpha),
which leaves the one-dimensional profile identity

    R(g*(alpha), alpha) = P - Uhat(alpha)^2 / Dhat(alpha),

with P the time-shifted panel power (1/N) sum_{t=1..N} sum a(t)^2. The
estimator maximizes the ratio Uhat^2 / Dhat over alpha in [a1, a2] with a
coarse grid followed by golden-section refinement. The ratio form is used
rather than 2 log Uhat - log Dhat because it has the same maximizer and
stays defined when Uhat <= 0 (negative g, or sampling noise); the log form
is kept for the T/V diagnostics below.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import model
from .spectra import DegeneratePanelError, _stats, d_hat, u_hat

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class EstimationResult:
    """Profiled NLS estimate with optimizer diagnostics.

    g_hat always equals u_hat(alpha_hat) / d_hat(alpha_hat) and is
    recomputable from the panel; objective_at_opt is the maximized ratio
    Uhat^2 / Dhat.
    """

    alpha_hat: float
    g_hat: float
    objective_at_opt: float
    evals: int
    flags: list = field(default_factory=list)
    std_error_alpha: Optional[float] = None
    reduced_curve: Optional[list] = None

    def to_json_dict(self):
        d = {
            "alpha_hat": self.alpha_hat,
            "g_hat": self.g_hat,
            "objective": self.objective_at_opt,
            "evals": self.evals,
            "std_error_alpha": self.std_error_alpha,
            "flags": list(self.flags),
        }
        if self.reduced_curve is not None:
            d["curve"] = [[a, v] for a, v in self.reduced_curve]
        return d


def panel_power(panel):
    """Time-shifted power (1/N) sum_{t=1..N} sum_{l,m} a(t)^2."""
    return float(np.sum(_stats(panel).power))


def objective_full(panel, g, alpha):
    """Full least squares objective R(g, alpha); nonnegative.

    Evaluated in residual form (not through the cached autocovariances) so
    that a panel following the recursion exactly yields exactly zero.
    """
    from .simulate import track_labels

    ells, _ = track_labels(panel.lmax)
    phi = g * np.exp(-alpha * np.log(ells.astype(float)))
    resid = panel.values[:, 1:] - phi[:, None] * panel.values[:, :-1]
    return float(np.sum(resid * resid)) / panel.n


def _dhat_checked(panel, alpha):
    d = d_hat(panel, alpha)
    if d <= 0.0:
        raise DegeneratePanelError("Dhat(alpha) = 0: panel carries no usable power")
    return d


def profile_g(panel, alpha):
    """Closed-form minimizer of g -> R(g, alpha): Uhat(alpha) / Dhat(alpha)."""
    return u_hat(panel, alpha) / _dhat_checked(panel, alpha)


def reduced_objective(panel, alpha):
    """Profiled criterion Uhat(alpha)^2 / Dhat(alpha), maximized at alpha_hat."""
    u = u_hat(panel, alpha)
    return u * u / _dhat_checked(panel, alpha)


def reduced_objective_log(panel, alpha):
    """Log form 2 log Uhat - log Dhat; NaN when Uhat <= 0. Diagnostic only."""
    u = u_hat(panel, alpha)
    d = _dhat_checked(panel, alpha)
    if u <= 0.0:
        return math.nan
    return 2.0 * math.log(u) - math.log(d)


def _golden_max(fn, lo, hi, tol):
    """Deterministic golden-section maximization; ties move toward smaller alpha."""
    evals = 0
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    evals += 2
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = fn(d)
        evals += 1
    return 0.5 * (lo + hi), evals


def estimate(panel, space, grid_points=129, refine_tol=1e-8, curve=False):
    """Profiled NLS estimate of (g, alpha) over the admissible interval.

    A uniform grid of grid_points values of alpha brackets the maximum of
    the reduced objective (grid ties resolve toward the smallest alpha),
    then golden-section refinement narrows the bracket to width refine_tol.
    Flags: "identifiability" when the reduced objective is flat across the
    grid (the estimate is then reported at a1), "boundary_lower"/
    "boundary_upper" for solutions within tolerance of an endpoint, and
    "g_out_of_range" when |g_hat| >= 1.
    """
    if grid_points < 33:
        raise ValueError("grid_points must be at least 33")
    if refine_tol <= 0.0:
        raise ValueError("refine_tol must be positive")
    grid = np.linspace(space.a1, space.a2, grid_points)
    vals = np.array([reduced_objective(panel, a) for a in grid])
    evals = grid_points
    flags = []

    span = float(np.max(vals) - np.min(vals))
    scale = float(np.max(np.abs(vals)))
    if span <= 1e-12 * max(scale, 1e-300):
        flags.append("identifiability")
        alpha_hat = float(grid[0])
    else:
        i = int(np.argmax(vals))  # first maximum = smallest alpha on ties
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid_points - 1)]
        alpha_hat, extra = _golden_max(lambda a: reduced_objective(panel, a),
                                       float(lo), float(hi), refine_tol)
        evals += extra
        # Newton polish on the analytic derivatives; golden section alone
        # stalls on the floating point plateau around the maximum
        for _ in range(4):
            r1 = -score(panel, alpha_hat)
            r2 = information(panel, alpha_hat)
            if not (math.isfinite(r1) and math.isfinite(r2)) or r2 >= 0.0:
                break
            step = -r1 / r2
            new = min(max(alpha_hat + step, space.a1), space.a2)
            evals += 1
            if abs(new - alpha_hat) <= 1e-15 * max(1.0, abs(alpha_hat)):
                alpha_hat = new
                break
            alpha_hat = new

    boundary_tol = max(10.0 * refine_tol, 1e-9 * (space.a2 - space.a1))
    if alpha_hat - space.a1 <= boundary_tol:
        flags.append("boundary_lower")
    if space.a2 - alpha_hat <= boundary_tol:
        flags.append("boundary_upper")

    g = profile_g(panel, alpha_hat)
    if abs(g) >= 1.0:
        flags.append("g_out_of_range")

    return EstimationResult(
        alpha_hat=alpha_hat,
        g_hat=g,
        objective_at_opt=reduced_objective(panel, alpha_hat),
        evals=evals,
        flags=flags,
        reduced_curve=list(zip(grid.tolist(), vals.tolist())) if curve else None,
    )


def score(panel, alpha):
    """Derivative of the profiled objective in alpha:

    S(alpha) = (-2 Uhat' Uhat Dhat + Dhat' Uhat^2) / Dhat^2.
    """
    u0 = u_hat(panel, alpha)
    u1 = u_hat(panel, alpha, 1)
    d0 = _dhat_checked(panel, alpha)
    d1 = d_hat(panel, alpha, 1)
    return (-2.0 * u1 * u0 * d0 + d1 * u0 * u0) / d0**2


def information(panel, alpha):
    """Second-derivative expression of the profiled criterion:

    Q(alpha) = (2 Uhat'' Uhat Dhat^2 + 2 Uhat'^2 Dhat^2 - Dhat'' Uhat^2 Dhat
                - 4 Dhat' Dhat Uhat' Uhat + 2 Uhat^2 Dhat'^2) / Dhat^3.
    """
    u0 = u_hat(panel, alpha)
    u1 = u_hat(panel, alpha, 1)
    u2 = u_hat(panel, alpha, 2)
    d0 = _dhat_checked(panel, alpha)
    d1 = d_hat(panel, alpha, 1)
    d2 = d_hat(panel, alpha, 2)
    return (2.0 * u2 * u0 * d0**2 + 2.0 * u1**2 * d0**2 - d2 * u0**2 * d0
            - 4.0 * d1 * d0 * u1 * u0 + 2.0 * u0**2 * d1**2) / d0**3


def std_error_alpha(panel, result, h=None, gamma=None, rel_tol=1e-10):
    """Plug-in standard error sigma(theta_hat) / sqrt(N) for alpha_hat.

    The noise scale and smoothness (h, gamma) are not estimated and must be
    supplied; they default to the generating parameters attached to the
    panel when available.
    """
    if h is None or gamma is None:
        if panel.params is None:
            raise ValueError("h and gamma are required (panel carries no parameters)")
        h = panel.params.h if h is None else h
        gamma = panel.params.gamma if gamma is None else gamma
    theta = model.ModelParams(g=result.g_hat, alpha=result.alpha_hat, h=h, gamma=gamma)
    sigma2 = model.asymptotic_variance(theta, rel_tol)
    return math.sqrt(sigma2 / panel.n)


def diagnostic_v(params, alpha, alpha0, lmax):
    """Population objective gap V = log D(a)/D(a0) - 2 log U(a)/U(a0).

    Nonnegative for every truncation degree, zero only at alpha = alpha0,
    and monotone on each side of alpha0.
    """
    d_a = model.limit_series(params, alpha, "D", lmax)
    d_0 = model.limit_series(params, alpha0, "D", lmax)
    u_a = model.limit_series(params, alpha, "U", lmax)
    u_0 = model.limit_series(params, alpha0, "U", lmax)
    return math.log(d_a / d_0) - 2.0 * math.log(u_a / u_0)


def diagnostic_t(panel, params, alpha, alpha0):
    """Empirical-to-population log ratio combination

    T = 2 log Uhat(a)/U(a) - 2 log Uhat(a0)/U(a0)
        - [log Dhat(a)/D(a) - log Dhat(a0)/D(a0)]

    at the panel truncation degree. NaN when any ratio is nonpositive.
    With the log-form reduced objective, Rlog(a) - Rlog(a0) = T - V.
    """
    ratios = []
    for a in (alpha, alpha0):
        ratios.append(u_hat(panel, a) / model.limit_series(params, a, "U", panel.lmax))
        ratios.append(d_hat(panel, a) / model.limit_series(params, a, "D", panel.lmax))
    if any(r <= 0.0 for r in ratios):
        return math.nan
    ru_a, rd_a, ru_0, rd_0 = ratios
    return (2.0 * math.log(ru_a) - 2.0 * math.log(ru_0)
            - (math.log(rd_a) - math.log(rd_0)))
