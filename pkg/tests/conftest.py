import numpy as np
import pytest

from sphar import CoefficientPanel, ModelParams, SimConfig, simulate_panel


def random_panel(lmax, n, seed, scale=1.0):
    """Panel of iid normal values; no AR structure, for algebraic identities."""
    rng = np.random.default_rng(seed)
    values = scale * rng.standard_normal((lmax * (lmax + 2), n + 1))
    return CoefficientPanel(lmax=lmax, n=n, values=values)


def constant_panel(lmax, n, value=1.0):
    values = np.full((lmax * (lmax + 2), n + 1), value)
    return CoefficientPanel(lmax=lmax, n=n, values=values)


def sim_panel(params, n, lmax, seed):
    return simulate_panel(params, SimConfig(n=n, lmax=lmax, seed=seed))


def exact_recursion_panel(params, lmax, n, seed):
    """Panel following a(t) = phi_l a(t-1) exactly (zero noise), from random a(0)."""
    from sphar.simulate import track_labels
    from sphar.model import phi_ell

    rng = np.random.default_rng(seed)
    ells, _ = track_labels(lmax)
    phi = phi_ell(params, ells)
    values = np.empty((lmax * (lmax + 2), n + 1))
    values[:, 0] = rng.standard_normal(lmax * (lmax + 2)) + 2.0  # keep away from 0
    for t in range(1, n + 1):
        values[:, t] = phi * values[:, t - 1]
    return CoefficientPanel(lmax=lmax, n=n, values=values, params=params)


@pytest.fixture
def theta0():
    return ModelParams(g=0.7, alpha=1.5, h=1.0, gamma=3.0)


def random_params(rng, alpha_range=(1.2, 2.8)):
    g = rng.uniform(0.15, 0.9) * rng.choice([-1.0, 1.0])
    return ModelParams(
        g=float(g),
        alpha=float(rng.uniform(*alpha_range)),
        h=float(rng.uniform(0.3, 3.0)),
        gamma=float(rng.uniform(2.3, 4.5)),
    )
