"""Closed-form stationary oracles.

For the exclusion model the equations for one- and two-point functions close
on themselves, so the exact stationary moments follow from one sparse linear
solve.  The zero-range model has a product stationary law whose site
fugacities solve a discrete Dirichlet problem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..lattice import LatticeGeometry, laplacian_matrix
from .model import SEP, ZRP, ClassicalModelSpec


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SepMoments:
    mean: np.ndarray  # <n_x>
    second: np.ndarray  # <n_x n_y>, diagonal equal to the mean

    @property
    def covariance(self) -> np.ndarray:
        return self.second - np.outer(self.mean, self.mean)


def sep_mean_profile(spec: ClassicalModelSpec, geom: LatticeGeometry) -> np.ndarray:
    """Exact stationary <n_x> from the closed one-point equations alone."""
    if spec.variant != SEP:
        raise ValueError("moment oracle requires the exclusion model")
    h = spec.boundary_rates(geom)
    k = h + geom.exit_multiplicity
    A = laplacian_matrix(geom) - sp.diags(k)
    rho = np.atleast_1d(spla.spsolve(A.tocsc(), -h))
    if not np.all(np.isfinite(rho)):
        raise OracleError("one-point system is singular")
    return rho


def sep_moment_oracle(spec: ClassicalModelSpec, geom: LatticeGeometry) -> SepMoments:
    """Exact stationary <n_x> and <n_x n_y> of the boundary-driven exclusion model.

    Unknowns are the M densities and the M(M-1)/2 pair functions with x < y;
    each equation is E[G_cl(observable)] = 0.
    """
    if spec.variant != SEP:
        raise ValueError("moment oracle requires the exclusion model")
    M = geom.n_sites
    h = spec.boundary_rates(geom)
    k = h + geom.exit_multiplicity  # loss coefficient of n_b at the boundary
    nbrs = [row[row >= 0] for row in geom.neighbors]

    iu, ju = np.triu_indices(M, k=1)
    pair_id = np.full((M, M), -1, dtype=np.int64)
    pair_id[iu, ju] = M + np.arange(len(iu))
    pair_id[ju, iu] = pair_id[iu, ju]
    diag = np.arange(M)
    pair_id[diag, diag] = diag  # <n_x n_x> = <n_x>
    n_unknowns = M + len(iu)

    rows, cols, vals = [], [], []
    rhs = np.zeros(n_unknowns)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for x in range(M):
        for z in nbrs[x]:
            put(x, z, 1.0)
        put(x, x, -float(len(nbrs[x])) - k[x])
        rhs[x] = -h[x]

    adjacent = set()
    for x in range(M):
        for z in nbrs[x]:
            adjacent.add((x, int(z)))

    # two-point equations, vectorised per row x would obscure the algebra; the
    # loop is fine for the sizes the oracle is used at (M up to a few hundred)
    for x, y in zip(iu, ju):
        row = pair_id[x, y]
        diagc = 0.0
        for z in nbrs[x]:
            put(row, pair_id[z, y], 1.0)
        diagc -= len(nbrs[x])
        for z in nbrs[y]:
            put(row, pair_id[x, z], 1.0)
        diagc -= len(nbrs[y])
        if h[x] > 0:
            put(row, y, h[x])
        if h[y] > 0:
            put(row, x, h[y])
        diagc -= k[x] + k[y]
        if (x, y) in adjacent:
            put(row, x, -1.0)
            put(row, y, -1.0)
            diagc += 2.0
        put(row, row, diagc)

    A = sp.csc_matrix((vals, (rows, cols)), shape=(n_unknowns, n_unknowns))
    try:
        sol = spla.spsolve(A, rhs)
    except RuntimeError as exc:  # pragma: no cover - singular factorisation
        raise OracleError(f"moment system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise OracleError("moment system is singular")
    resid = np.abs(A @ sol - rhs).max()
    if resid > 1e-8:
        raise OracleError(f"moment system residual {resid:.3e}")
    mean = sol[:M]
    second = np.empty((M, M))
    second[diag, diag] = mean
    second[iu, ju] = sol[M:]
    second[ju, iu] = sol[M:]
    return SepMoments(mean=mean, second=second)


@dataclass(frozen=True)
class ZrpProductMeasure:
    fugacity: np.ndarray  # z_x
    marginals: np.ndarray  # (M, n_max + 1)

    @property
    def mean(self) -> np.ndarray:
        return self.marginals @ np.arange(self.marginals.shape[1])

    @property
    def variance(self) -> np.ndarray:
        n = np.arange(self.marginals.shape[1])
        return self.marginals @ n**2 - self.mean**2


def zrp_weights(z, g_table: np.ndarray) -> np.ndarray:
    """Unnormalized z^n / Π_{k<=n} g(k) for n = 0..len(g_table)-1, per fugacity."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    gfact = np.concatenate([[1.0], np.cumprod(g_table[1:])])
    n = np.arange(len(g_table))
    with np.errstate(divide="ignore"):
        logw = n[None, :] * np.log(z[:, None]) - np.log(gfact)[None, :]
    logw -= logw.max(axis=1, keepdims=True)
    return np.exp(logw)


def zrp_fugacity(spec: ClassicalModelSpec, geom: LatticeGeometry) -> np.ndarray:
    """Solve Σ_y (z_y - z_x) + h_x - r_x z_x = 0 on every site."""
    h = spec.boundary_rates(geom)
    A = laplacian_matrix(geom) - sp.diags(geom.exit_multiplicity.astype(float))
    z = spla.spsolve(A.tocsc(), -h)
    z = np.atleast_1d(z)
    if not np.all(np.isfinite(z)) or np.any(z <= 0):
        raise OracleError(f"fugacity solve failed: z range [{z.min()}, {z.max()}]")
    return z


def zrp_product_measure(spec: ClassicalModelSpec, geom: LatticeGeometry) -> ZrpProductMeasure:
    """Fugacity profile and product marginals P_x(n) ∝ z_x^n / Π g(k) over {0..n_max}."""
    if spec.variant != ZRP:
        raise ValueError("product measure requires the zero-range model")
    z = zrp_fugacity(spec, geom)
    w = zrp_weights(z, spec.g_table())
    return ZrpProductMeasure(fugacity=z, marginals=w / w.sum(axis=1, keepdims=True))
