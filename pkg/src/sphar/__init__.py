"""Spherical AR(1) processes: simulation, profiled NLS estimation of the
autoregressive spectral parameters, asymptotic variance evaluation and
Monte Carlo verification."""

__version__ = "0.1.0"

from .harmonics import SpherePoint, addition_check, assoc_legendre, legendre_p, real_sph_harm
from .model import (
    ModelParams,
    ParamSpace,
    SeriesConvergenceError,
    asymptotic_variance,
    covariance_kernel,
    covariance_spectrum,
    limit_series,
    limit_series_converged,
    limiting_information,
    phi_ell,
    variance_report,
)
from .simulate import (
    CoefficientPanel,
    PanelSizeError,
    SimConfig,
    read_panel_csv,
    simulate_panel,
    synthesize_field,
    truncation_schedule,
    write_panel_csv,
)
from .spectra import DegeneratePanelError, empirical_autocov, empirical_spectra, d_hat, u_hat
from .estimator import (
    EstimationResult,
    diagnostic_t,
    diagnostic_v,
    estimate,
    information,
    objective_full,
    profile_g,
    reduced_objective,
    reduced_objective_log,
    score,
    std_error_alpha,
)
from .montecarlo import McConfig, McFailureError, McSummary, normality_stats, run_mc

__all__ = [
    "SpherePoint", "legendre_p", "assoc_legendre", "real_sph_harm", "addition_check",
    "ModelParams", "ParamSpace", "SeriesConvergenceError", "phi_ell",
    "covariance_spectrum", "covariance_kernel", "limit_series",
    "limit_series_converged", "limiting_information", "asymptotic_variance",
    "variance_report",
    "CoefficientPanel", "SimConfig", "PanelSizeError", "simulate_panel",
    "truncation_schedule", "synthesize_field", "write_panel_csv", "read_panel_csv",
    "DegeneratePanelError", "empirical_autocov", "empirical_spectra", "u_hat", "d_hat",
    "EstimationResult", "objective_full", "profile_g", "reduced_objective",
    "reduced_objective_log", "estimate", "score", "information", "std_error_alpha",
    "diagnostic_v", "diagnostic_t",
    "McConfig", "McFailureError", "McSummary", "normality_stats", "run_mc",
]
