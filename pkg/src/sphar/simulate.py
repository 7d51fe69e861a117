"""Exact simulation of harmonic coefficient panels and field synthesis.

Every (l, m) coefficient track is an independent scalar AR(1),

    a_{l,m}(t) = phi_l a_{l,m}(t-1) + z_{l,m}(t),   z ~ N(0, C_{l;Z}) iid,

initialized from its stationary law N(0, C_l(0)) by default. Each track
draws from its own counter-based Philox stream keyed by (seed, l, m), so the
panel is reproducible bit for bit and independent of the order, thread or
process in which tracks are generated.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels, model
from .harmonics import FOUR_PI

MAX_PANEL_VALUES = 200_000_000  # ~1.6 GB of float64


class PanelSizeError(RuntimeError):
    """Raised when a requested panel would exceed the memory budget."""


def n_tracks(lmax):
    """Number of (l, m) tracks for degrees 1..lmax: sum of (2l+1) = lmax(lmax+2)."""
    return lmax * (lmax + 2)


def track_index(ell, m):
    """Row of track (l, m) in the panel layout (l-major, m from -l to l)."""
    return ell * ell - 1 + (m + ell)


def track_labels(lmax):
    """Arrays (ells, ms) giving the degree and order of every panel row."""
    ells = np.concatenate([np.full(2 * ell + 1, ell) for ell in range(1, lmax + 1)])
    ms = np.concatenate([np.arange(-ell, ell + 1) for ell in range(1, lmax + 1)])
    return ells, ms


@dataclass(frozen=True)
class SimConfig:
    """Simulation request: n transitions, degrees 1..lmax, seed, initialization.

    init is "stationary" (exact draw from the stationary law) or "burnin:B"
    (start every track at zero and discard B warm-up steps).
    """

    n: int
    lmax: int
    seed: int
    init: str = "stationary"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2 for at least one (t-1, t) pair")
        if self.lmax < 1:
            raise ValueError("lmax must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.burnin  # validates the init string

    @property
    def burnin(self):
        if self.init == "stationary":
            return None
        if self.init.startswith("burnin:"):
            b = int(self.init.split(":", 1)[1])
            if b < 0:
                raise ValueError("burn-in length must be nonnegative")
            return b
        raise ValueError(f"init must be 'stationary' or 'burnin:B', got {self.init!r}")


@dataclass
class CoefficientPanel:
    """Simulated or loaded coefficient tracks a_{l,m}(t).

    values has shape (lmax*(lmax+2), n+1): one row per (l, m) track in
    l-major order with m ascending, contiguous in t. The array is marked
    read-only; per-panel summary statistics are cached lazily.
    """

    lmax: int
    n: int
    values: np.ndarray
    params: Optional[model.ModelParams] = None
    seed: Optional[int] = None
    _stats: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        expected = (n_tracks(self.lmax), self.n + 1)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != expected {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("panel values must all be finite")
        self.values = np.ascontiguousarray(self.values, dtype=float)
        self.values.flags.writeable = False

    @property
    def n_tracks(self):
        return n_tracks(self.lmax)

    def block(self, ell):
        """View of the 2l+1 rows of degree l."""
        if not 1 <= ell <= self.lmax:
            raise IndexError(f"degree {ell} outside 1..{self.lmax}")
        start = ell * ell - 1
        return self.values[start:start + 2 * ell + 1]


def _track_normals(seed, ell, m, count):
    # 128-bit Philox key: high word = seed, low word packs (l, m)
    key = np.array([seed, (ell << 32) | (m + ell)], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(count)


def simulate_panel(params, config, max_values=MAX_PANEL_VALUES):
    """Simulate a coefficient panel under the parametric model.

    Reproducible from (params, config) alone; see the module docstring for
    the per-track stream contract. Raises PanelSizeError when
    lmax(lmax+2)(n+1) exceeds max_values.
    """
    lmax, n = config.lmax, config.n
    total = n_tracks(lmax) * (n + 1)
    if total > max_values:
        raise PanelSizeError(
            f"panel of {total} values exceeds the budget of {max_values}")

    burnin = config.burnin
    steps = n if burnin is None else n + burnin
    ells, ms = track_labels(lmax)
    phi = model.phi_ell(params, ells)
    sd_noise = np.sqrt(model.noise_spectrum(params, ells))
    sd_init = np.sqrt(model.covariance_spectrum(params, ells, 0))

    ntr = n_tracks(lmax)
    eps = np.empty((ntr, steps))
    a0 = np.zeros(ntr)
    for i in range(ntr):
        if burnin is None:
            draws = _track_normals(config.seed, int(ells[i]), int(ms[i]), steps + 1)
            a0[i] = sd_init[i] * draws[0]
            eps[i] = sd_noise[i] * draws[1:]
        else:
            draws = _track_normals(config.seed, int(ells[i]), int(ms[i]), steps)
            eps[i] = sd_noise[i] * draws

    values = kernels.ar1_recursion(phi, a0, eps)
    if burnin is not None:
        values = np.ascontiguousarray(values[:, burnin:])
    return CoefficientPanel(lmax=lmax, n=n, values=values, params=params, seed=config.seed)


def truncation_schedule(n, rule):
    """Truncation degree for a sample of length n.

    rule is "fixed:L" for a constant degree or "power:p" for
    max(1, floor(n^p)); "power" alone uses the default exponent p = 0.2.
    A 1e-9 slack absorbs representation dust in n^p before flooring.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if rule == "power":
        rule = "power:0.2"
    kind, _, arg = rule.partition(":")
    if kind == "fixed":
        lmax = int(arg)
        if lmax < 1:
            raise ValueError("fixed truncation degree must be >= 1")
        return lmax
    if kind == "power":
        p = float(arg)
        if not 0.0 < p < 1.0:
            raise ValueError("power exponent must lie in (0, 1)")
        return max(1, int(math.floor(n**p + 1e-9)))
    raise ValueError(f"unknown truncation rule {rule!r}")


def synthesize_field(panel, t, grid, mean_coeff=0.0):
    """Evaluate the truncated field at time t on a list of SpherePoints.

    Returns sum_{l=1..lmax} sum_m a_{l,m}(t) Y_{l,m}(x) for each grid point.
    The degree-zero term is excluded from the panel by convention;
    mean_coeff adds an optional constant term mean_coeff * Y_{0,0}.
    """
    if not 0 <= t <= panel.n:
        raise IndexError(f"time {t} outside 0..{panel.n}")
    theta = np.array([p.colatitude for p in grid], dtype=float)
    phi = np.array([p.longitude for p in grid], dtype=float)
    if theta.size == 0:
        return np.empty(0)
    y = kernels.ylm_matrix(theta, phi, panel.lmax)
    out = panel.values[:, t] @ y
    if mean_coeff != 0.0:
        out = out + mean_coeff / math.sqrt(FOUR_PI)
    return out


# ---------------------------------------------------------------------------
# Panel file format: CSV with a JSON metadata comment line
# ---------------------------------------------------------------------------

_PANEL_MAGIC = "# sphar-panel "


def write_panel_csv(panel, path):
    """Write a panel as `ell,m,t,value` rows after a JSON metadata line.

    Values are formatted with 17 significant digits and round-trip exactly.
    """
    meta = {
        "lmax": panel.lmax,
        "n": panel.n,
        "seed": panel.seed,
        "params": panel.params.to_json_dict() if panel.params else None,
    }
    ells, ms = track_labels(panel.lmax)
    with open(path, "w", newline="") as fh:
        fh.write(_PANEL_MAGIC + json.dumps(meta) + "\n")
        fh.write("ell,m,t,value\n")
        for i in range(panel.n_tracks):
            ell, m = int(ells[i]), int(ms[i])
            row = panel.values[i]
            for t in range(panel.n + 1):
                fh.write(f"{ell},{m},{t},{row[t]:.17g}\n")


def read_panel_csv(path):
    """Read a panel written by write_panel_csv."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith(_PANEL_MAGIC):
            raise ValueError(f"{path} is not a sphar panel file")
        meta = json.loads(first[len(_PANEL_MAGIC):])
        header = fh.readline().strip()
        if header != "ell,m,t,value":
            raise ValueError(f"unexpected panel header {header!r}")
    raw = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    lmax, n = int(meta["lmax"]), int(meta["n"])
    ntr = n_tracks(lmax)
    if raw.shape != (ntr * (n + 1), 4):
        raise ValueError(f"panel data shape {raw.shape} inconsistent with metadata")
    values = np.empty((ntr, n + 1))
    rows = track_index(raw[:, 0].astype(int), raw[:, 1].astype(int))
    values[rows, raw[:, 2].astype(int)] = raw[:, 3]
    params = model.ModelParams.from_json_dict(meta["params"]) if meta["params"] else None
    return CoefficientPanel(lmax=lmax, n=n, values=values, params=params,
                            seed=meta["seed"])
