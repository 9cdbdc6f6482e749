"""Macroscopic hydrodynamics on the unit interval.

Solves dq/dt = Δ Φ(q) with Dirichlet data Φ(q) = h at x = 0, 1, returns the
stationary profile, and builds the linearized operator L = Δ[Φ'(q̄) ·] with
its semigroup.  Grids are uniform with n_interior unknowns and spacing
1 / (n_interior + 1), so a grid with n_interior = N - 1 sits exactly on the
macroscopic coordinates y / N of a one-dimensional lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .classical.oracles import zrp_weights
from .io import write_csv

BISECTION_TOL = 1e-12
MAX_EXPM_NODES = 512
MAX_PRINCIPLE_TOL = 1e-9


class HydroError(RuntimeError):
    pass


@dataclass(frozen=True)
class MacroGrid:
    n_interior: int

    def __post_init__(self):
        if self.n_interior < 1:
            raise ValueError("grid needs at least one interior node")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_interior + 2)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @classmethod
    def matching_lattice(cls, N: int) -> "MacroGrid":
        """Grid whose interior nodes are y / N, y = 1..N-1."""
        return cls(N - 1)

    def dirichlet_laplacian(self) -> sp.csr_matrix:
        n = self.n_interior
        main = -2.0 * np.ones(n)
        off = np.ones(n - 1)
        return (sp.diags([off, main, off], [-1, 0, 1]) / self.dx**2).tocsr()


@dataclass(frozen=True)
class FluxFunction:
    """Φ with Φ', χ and Φ^{-1} on a physical density range [q_min, q_max)."""

    name: str
    phi: Callable
    dphi: Callable
    chi: Callable
    inverse: Callable  # Φ^{-1}
    q_range: tuple[float, float]
    h_range: tuple[float, float]
    joint: Callable | None = None  # q -> (Φ, Φ') in one pass, when cheaper

    def phi_dphi(self, q):
        if self.joint is not None:
            return self.joint(q)
        return self.phi(q), self.dphi(q)

    def check_density(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        lo, hi = self.q_range
        if np.any(q < lo - MAX_PRINCIPLE_TOL) or np.any(q > hi + MAX_PRINCIPLE_TOL):
            raise HydroError(f"density outside the physical range [{lo}, {hi}]")
        return q

    def invert(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        lo, hi = self.h_range
        if np.any(h < lo) or np.any(h > hi):
            raise HydroError(f"boundary value {h} outside the range of Φ [{lo}, {hi})")
        return self.inverse(h)

    def tabulate(self, q) -> np.ndarray:
        """Rows (q, Φ, Φ', χ)."""
        q = np.asarray(q, dtype=float)
        return np.column_stack([q, self.phi(q), self.dphi(q), self.chi(q)])

    def to_csv(self, path, q) -> None:
        write_csv(path, ["q", "phi", "dphi", "chi"], self.tabulate(q))


def sep_flux_function() -> FluxFunction:
    ident = lambda q: np.asarray(q, dtype=float).copy()
    return FluxFunction(
        name="sep",
        phi=ident,
        dphi=lambda q: np.ones_like(np.asarray(q, dtype=float)),
        chi=lambda q: np.asarray(q, dtype=float) * (1.0 - np.asarray(q, dtype=float)),
        inverse=ident,
        q_range=(0.0, 1.0),
        h_range=(0.0, 1.0 + 1e-15),
    )


class _ZrpMoments:
    """Moments of the fugacity-z marginal P(n) ∝ z^n / Π g(k) on {0..n_max}."""

    def __init__(self, g_table: np.ndarray):
        self.g = np.asarray(g_table, dtype=float)
        self.n = np.arange(len(self.g), dtype=float)
        self.log_gfact = np.log(zrp_weights(1.0, self.g)[0])

    def moments(self, z):
        z = np.asarray(z, dtype=float)
        shape = z.shape
        zf = np.maximum(z.ravel(), 1e-300)
        logw = np.log(zf)[:, None] * self.n[None, :] + self.log_gfact[None, :]
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        w /= w.sum(axis=1, keepdims=True)
        mean = w @ self.n
        var = w @ self.n**2 - mean**2
        return mean.reshape(shape), np.maximum(var, 0.0).reshape(shape)

    def density(self, z):
        return self.moments(z)[0]

    def fugacity(self, q, zs: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Solve q(z) = q: bracket on the tabulation (zs, qs), then safeguarded
        Newton with dq/dz = Var / z, to relative tolerance 1e-12."""
        q = np.asarray(q, dtype=float)
        k = np.clip(np.searchsorted(qs, q), 1, len(qs) - 1)
        lo = np.where(q <= qs[0], 0.0, zs[k - 1])
        hi = zs[k].copy()
        z = np.where(q <= qs[0], q * zs[0] / qs[0], np.interp(q, qs, zs))
        for _ in range(100):
            mean, var = self.moments(z)
            above = mean > q
            hi = np.where(above, z, hi)
            lo = np.where(above, lo, z)
            step = (mean - q) * z / np.maximum(var, 1e-300)
            new = z - step
            bad = (new < lo) | (new > hi) | ~np.isfinite(new)
            new = np.where(bad, 0.5 * (lo + hi), new)
            done = np.abs(new - z) <= BISECTION_TOL * np.maximum(z, 1e-300)
            z = new
            if np.all(done):
                break
        return z


def zrp_flux_function(g=None, n_max: int = 200) -> FluxFunction:
    """Flux of the zero-range model with jump rate g truncated at ``n_max``.

    The marginal with fugacity z has mean g(n) equal to z, so Φ(q) is the
    fugacity of density q; Φ'(q) = z / Var_z(n) and χ(q) = Var_z(n).
    """
    from .classical.model import unit_rate

    g = unit_rate if g is None else g
    table = np.array([0.0] + [float(g(k)) for k in range(1, n_max + 1)])
    if np.any(table[1:] <= 0):
        raise ValueError("g must be positive for k >= 1")
    mom = _ZrpMoments(table)
    # largest fugacity whose density stays safely below the cap
    z_hi = float(table[1:].max()) * 1e3
    q_cap = float(mom.density(np.array([z_hi]))[0])
    zs = np.geomspace(1e-8, z_hi, 4000)
    qs = mom.density(zs)  # monotone tabulation used to bracket Φ
    if np.any(np.diff(qs) <= 0):
        raise HydroError("q(z) is not strictly increasing on the tabulated range")

    def phi(q):
        q = np.asarray(q, dtype=float)
        if np.any(q < 0) or np.any(q >= q_cap):
            raise HydroError(f"density outside the invertible range [0, {q_cap:.6g})")
        return mom.fugacity(q, zs, qs)

    def chi(q):
        return mom.moments(phi(q))[1]

    def joint(q):
        z = phi(q)
        var = mom.moments(z)[1]
        # small-z limit: Var ≈ z / g(1), so Φ' → g(1)
        return z, np.where(var > 1e-290, z / np.maximum(var, 1e-300), table[1])

    def dphi(q):
        return joint(q)[1]

    return FluxFunction(
        name=f"zrp(n_max={n_max})",
        phi=phi,
        dphi=dphi,
        chi=chi,
        inverse=lambda h: mom.density(np.asarray(h, dtype=float)),
        q_range=(0.0, q_cap),
        h_range=(0.0, z_hi),
        joint=joint,
    )


@dataclass
class DensityProfile:
    grid: MacroGrid
    values: np.ndarray  # all nodes, boundary included
    t: float = 0.0
    ledger: list = field(default_factory=list, repr=False)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def to_csv(self, path) -> None:
        write_csv(path, ["x", "q"], np.column_stack([self.grid.nodes, self.values]))


def boundary_values(h) -> tuple[float, float]:
    """(h(0), h(1)) from a pair or a callable."""
    if callable(h):
        return float(h(0.0)), float(h(1.0))
    h0, h1 = h
    return float(h0), float(h1)


def stationary_profile(h, flux: FluxFunction, grid: MacroGrid) -> DensityProfile:
    """Φ(q̄) is the linear interpolation of the boundary data; q̄ = Φ^{-1} of it."""
    h0, h1 = boundary_values(h)
    x = grid.nodes
    return DensityProfile(grid, flux.invert(h0 + (h1 - h0) * x), t=np.inf)


def solve_pde(q0, h, flux: FluxFunction, t: float, grid: MacroGrid | None = None, *,
              method: str = "implicit", dt: float | None = None, newton_tol: float = 1e-12,
              max_newton: int = 50) -> DensityProfile:
    """Method-of-lines solution of dq/dt = Δ Φ(q) up to time ``t``.

    ``q0`` is a DensityProfile, an array over all nodes, or a callable of x.
    Boundary nodes hold Φ^{-1}(h).  ``method`` is "implicit" (backward Euler
    with Newton) or "explicit" (forward Euler, step capped at the CFL bound).
    The returned profile carries a per-step mass ledger.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if isinstance(q0, DensityProfile):
        grid = q0.grid
        q = q0.values.astype(float).copy()
    else:
        if grid is None:
            raise ValueError("a grid is needed when q0 is not a DensityProfile")
        q = np.asarray(q0(grid.nodes) if callable(q0) else q0, dtype=float).copy()
    if q.shape != (grid.n_interior + 2,):
        raise ValueError("initial profile must cover all grid nodes")
    h0, h1 = boundary_values(h)
    q[0], q[-1] = flux.invert([h0, h1])
    flux.check_density(q)
    lo, hi = q.min(), q.max()  # convex hull of initial and boundary data

    dx = grid.dx
    A = grid.dirichlet_laplacian()
    bvec = np.zeros(grid.n_interior)
    bvec[0] += h0 / dx**2
    bvec[-1] += h1 / dx**2

    if method == "explicit":
        # the maximum principle keeps q in [lo, hi], so Φ' is bounded by its max there
        bound = dx**2 / (2.0 * float(np.max(flux.dphi(np.linspace(lo, hi, 65)))))
        step = bound if dt is None else min(dt, bound)
    elif method == "implicit":
        step = dx**2 if dt is None else dt
    else:
        raise ValueError(f"unknown method {method!r}")
    n_steps = max(1, int(np.ceil(t / step))) if t > 0 else 0
    step = t / n_steps if n_steps else 0.0

    ledger = []
    u = q[1:-1]
    for _ in range(n_steps):
        mass0 = u.sum() * dx
        if method == "explicit":
            p = flux.phi(u)
            new = u + step * (A @ p + bvec)
        else:
            new = _backward_euler_step(u, step, dx, A, bvec, flux, newton_tol, max_newton)
            p = flux.phi(new)
        influx_left = step * (h0 - p[0]) / dx
        influx_right = step * (h1 - p[-1]) / dx
        mass1 = new.sum() * dx
        ledger.append({"mass_before": mass0, "mass_after": mass1, "influx_left": influx_left,
                       "influx_right": influx_right,
                       "imbalance": mass1 - mass0 - influx_left - influx_right})
        u = new
    q[1:-1] = u
    if q.min() < lo - MAX_PRINCIPLE_TOL or q.max() > hi + MAX_PRINCIPLE_TOL:
        raise HydroError("discrete maximum principle violated")
    return DensityProfile(grid, q, t=float(t), ledger=ledger)


def _backward_euler_step(u, step, dx, A, bvec, flux, tol, max_iter):
    # the Jacobian I - step Δ diag(Φ') is tridiagonal; solve it in banded form
    c = step / dx**2
    new = u.copy()
    ab = np.zeros((3, len(u)))
    for _ in range(max_iter):
        p, d = flux.phi_dphi(new)
        res = new - u - step * (A @ p + bvec)
        ab[0, 1:] = -c * d[1:]
        ab[1] = 1.0 + 2.0 * c * d
        ab[2, :-1] = -c * d[:-1]
        delta = sla.solve_banded((1, 1), ab, res)
        new = new - delta
        if np.max(np.abs(delta)) <= tol * max(1.0, np.max(np.abs(new))):
            return new
    raise HydroError("Newton iteration did not converge")





@dataclass
class LinearizedOperator:
    """Dense realization of L = Δ[Φ'(q̄) ·] on interior nodes, Dirichlet zero."""

    grid: MacroGrid
    qbar: np.ndarray  # interior values
    dphi: np.ndarray  # Φ'(q̄) at interior nodes
    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def adjoint(self) -> np.ndarray:
        """L* = Φ'(q̄) Δ; the grid inner product has uniform weights."""
        return self.matrix.T

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def propagator(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("semigroup is defined for t >= 0 only")
        key = float(t)
        if key not in self._cache:
            self._cache[key] = sla.expm(t * self.matrix)
        return self._cache[key]


def linearized_operator(qbar, flux: FluxFunction, grid: MacroGrid | None = None,
                        dphi_scale: float = 1.0) -> LinearizedOperator:
    """``dphi_scale`` multiplies Φ' (used by sensitivity controls)."""
    if isinstance(qbar, DensityProfile):
        grid = qbar.grid
        qbar = qbar.interior
    qbar = np.asarray(qbar, dtype=float)
    if grid is None:
        grid = MacroGrid(len(qbar))
    if len(qbar) == grid.n_interior + 2:
        qbar = qbar[1:-1]
    lo, hi = flux.q_range
    if np.any(qbar <= lo) or np.any(qbar >= hi):
        raise HydroError("q̄ must lie strictly inside the physical range")
    if grid.n_interior > MAX_EXPM_NODES:
        raise HydroError(f"grid larger than {MAX_EXPM_NODES} nodes")
    d = dphi_scale * flux.dphi(qbar)
    M = grid.dirichlet_laplacian().toarray() * d[None, :]
    return LinearizedOperator(grid, qbar, d, M)


def semigroup_apply(L: LinearizedOperator, t: float, v, adjoint: bool = False) -> np.ndarray:
    """T_t v (or T_t* v).  ``v`` covers interior nodes or all nodes; in the latter
    case boundary entries are ignored and returned as zero."""
    v = np.asarray(v)
    n = L.grid.n_interior
    full = v.shape[0] == n + 2
    inner = v[1:-1] if full else v
    if inner.shape[0] != n:
        raise ValueError("vector does not match the grid")
    P = L.propagator(t)
    out = (P.T if adjoint else P) @ inner
    if full:
        pad = np.zeros((n + 2,) + out.shape[1:], dtype=out.dtype)
        pad[1:-1] = out
        return pad
    return out
