"""Linear fluctuating hydrodynamics: dξ = L ξ dt + dw on the macroscopic grid.

A grid field u represents ξ through ξ(f) = dx Σ_i u_i f(x_i).  The noise has
covariance Q dt with dx^2 f^T Q g ≈ 2 ∫ χ Φ' f' g', factorized over edges as
Q = F F^T, F = D^T diag(sqrt(w_e)) / dx^{3/2}.  The stationary covariance of u
solves L C + C L^T + Q = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.linalg as sla

from ..classical.model import trajectory_rng
from ..hydro import FluxFunction, LinearizedOperator, MacroGrid, linearized_operator
from .prediction import _s_profile, edge_difference, stationary_density
from .series import FieldSeries


@dataclass
class OUSpec:
    grid: MacroGrid
    L: LinearizedOperator
    edge_weights: np.ndarray  # w_e = 2 χ Φ'(q̄) at edge midpoints, length n + 1
    qbar: np.ndarray  # interior values
    density_scale: float = 1.0

    def __post_init__(self):
        if np.any(self.edge_weights < 0):
            raise ValueError("noise weights must be non-negative")

    @property
    def noise_factor(self) -> np.ndarray:
        D = edge_difference(self.grid)
        return D.T * np.sqrt(self.edge_weights)[None, :] / self.grid.dx**1.5

    @property
    def noise_covariance(self) -> np.ndarray:
        F = self.noise_factor
        return self.density_scale * (F @ F.T)

    def pair(self, f, g, C) -> float:
        """dx^2 f^T C g for grid samplings or callables."""
        x = self.grid.interior
        fv = f(x) if callable(f) else np.asarray(f)
        gv = g(x) if callable(g) else np.asarray(g)
        return float(self.grid.dx**2 * fv @ C @ gv)


def ou_spec(h, flux: FluxFunction, n_interior: int, density_scale: float = 1.0,
            dphi_scale: float = 1.0) -> OUSpec:
    grid = MacroGrid(n_interior)
    qbar_fn = stationary_density(h, flux)
    q = qbar_fn(grid.interior)
    Lop = linearized_operator(q, flux, grid, dphi_scale=dphi_scale)
    mid = 0.5 * (grid.nodes[1:] + grid.nodes[:-1])
    w = 2.0 * _s_profile(qbar_fn, flux, mid)
    return OUSpec(grid, Lop, w, q, density_scale)


def lyapunov_covariance(spec: OUSpec) -> np.ndarray:
    """Stationary grid covariance C from L C + C L^T = -Q."""
    return sla.solve_continuous_lyapunov(spec.L.matrix, -spec.noise_covariance)


def stable_step(spec: OUSpec, safety: float = 0.25) -> float:
    """Euler-Maruyama is stable for dt < 2 / spectral radius; take a fraction."""
    rho = float(np.max(np.abs(spec.L.spectrum())))
    return safety * 2.0 / rho


@numba.njit(cache=True)
def _em_block(u, d, c, eta, first, per_sample, W, out, fields, store):
    """Advance every path through eta.shape[1] steps.  Global step index of the
    block start is ``first`` (negative during burn-in); a sample is recorded
    after each global step that is a positive multiple of ``per_sample``."""
    n_paths, n = u.shape
    n_steps = eta.shape[1]
    n_obs = W.shape[1]
    v = np.empty(n)
    for p in range(n_paths):
        for t in range(n_steps):
            for i in range(n):
                v[i] = d[i] * u[p, i]
            for i in range(n):
                lap = -2.0 * v[i]
                if i > 0:
                    lap += v[i - 1]
                if i < n - 1:
                    lap += v[i + 1]
                u[p, i] += c * lap + eta[p, t, i] - eta[p, t, i + 1]
            g = first + t + 1
            if g > 0 and g % per_sample == 0:
                k = g // per_sample - 1
                for j in range(n_obs):
                    acc = 0.0
                    for i in range(n):
                        acc += W[i, j] * u[p, i]
                    out[p, k, j] = acc
                if store:
                    for i in range(n):
                        fields[p, k, i] = u[p, i]


@dataclass
class OUPaths:
    series: FieldSeries
    times: np.ndarray
    dt_integrator: float
    final: np.ndarray
    fields: np.ndarray | None = field(default=None, repr=False)


def ou_simulate(spec: OUSpec, t_end: float, n_paths: int, seed: int, *, observables=None,
                sample_dt: float | None = None, t_burn: float = 0.0, dt: float | None = None,
                x0=None, noise: bool = True, store_fields: bool = False) -> OUPaths:
    """Euler-Maruyama paths of the grid OU process.

    ``observables`` maps names to grid samplings of test functions; the
    returned series holds ξ(f) = dx Σ u_i f_i at every ``sample_dt`` after
    ``t_burn``.  A step above the stability bound is reduced automatically.
    """
    n = spec.grid.n_interior
    bound = stable_step(spec, safety=1.0)
    h = stable_step(spec) if dt is None else min(dt, 0.5 * bound)
    sample_dt = sample_dt or h
    per_sample = max(1, int(round(sample_dt / h)))
    h = sample_dt / per_sample
    n_burn = int(round(t_burn / h))
    n_samples = int(round((t_end - t_burn) / sample_dt))
    if n_samples < 1:
        raise ValueError("t_end leaves no samples after burn-in")

    names = list(observables or {})
    W = np.column_stack([np.asarray(observables[k], dtype=float) for k in names]) if names \
        else np.zeros((n, 0))
    W = W * spec.grid.dx

    d = np.ascontiguousarray(spec.L.dphi, dtype=float)
    a = np.sqrt(spec.density_scale * spec.edge_weights) * np.sqrt(h) / spec.grid.dx**1.5
    rng = trajectory_rng(seed, 0)
    u = np.zeros((n_paths, n)) if x0 is None else np.tile(np.asarray(x0, dtype=float), (n_paths, 1))
    out = np.empty((n_paths, n_samples, len(names)))
    fields = np.empty((n_paths, n_samples, n)) if store_fields else np.empty((1, 1, n))
    W = np.ascontiguousarray(W)
    total = n_burn + n_samples * per_sample
    block = max(1, min(total, 2**22 // (n_paths * (n + 1))))
    zeros = np.zeros((n_paths, block, n + 1))
    done = 0
    while done < total:
        m = min(block, total - done)
        eta = rng.standard_normal((n_paths, m, n + 1)) * a if noise else zeros[:, :m]
        _em_block(u, d, h / spec.grid.dx**2, eta, done - n_burn, per_sample, W, out, fields,
                  store_fields)
        done += m
    if not store_fields:
        fields = None
    times = t_burn + sample_dt * np.arange(1, n_samples + 1)
    series = FieldSeries({nm: out[:, :, i] for i, nm in enumerate(names)}, dt=sample_dt,
                         meta={"source": "ou", "dt_integrator": h, "seed": int(seed)})
    return OUPaths(series, times, h, u, fields)
