"""Lattice geometry for boundary-driven particle systems.

The region Omega_N is the set of integer points strictly inside the dilation
L_N * Omega of a unit-volume open region, with L_N = (N / nu) ** (1 / d).
Sites are enumerated lexicographically so that every matrix built on top of
the geometry (generators, Fock bases, covariance tables) is reproducible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

# distance from the dilated boundary below which a float point counts as outside
MEMBERSHIP_TOL = 1e-12


class Region:
    """Bounded open region of unit volume, described by a membership predicate."""

    dimension: int

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains_scaled(self, y: tuple[int, ...], scale) -> bool:
        """Is the lattice point ``y`` strictly inside ``scale * Omega``?"""
        raise NotImplementedError


@dataclass(frozen=True)
class UnitCube(Region):
    """The open cube (0, 1)^d; d = 1 gives the unit interval."""

    dimension: int = 1

    def bounds(self):
        return np.zeros(self.dimension), np.ones(self.dimension)

    def contains_scaled(self, y, scale):
        if isinstance(scale, Fraction):
            return all(0 < c < scale for c in y)
        tol = MEMBERSHIP_TOL * max(1.0, float(scale))
        return all(tol < c < scale - tol for c in y)

    def describe(self) -> str:
        return f"(0,1)^{self.dimension}"


@dataclass(frozen=True)
class PredicateRegion(Region):
    """Region given by a predicate on macroscopic coordinates plus a bounding box.

    The predicate receives a float array of shape (d,) and must return True
    for points of the open region.  Unit volume is the caller's responsibility.
    """

    dimension: int
    predicate: Callable[[np.ndarray], bool]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    name: str = "predicate"

    def bounds(self):
        return np.asarray(self.lower, float), np.asarray(self.upper, float)

    def contains_scaled(self, y, scale):
        return bool(self.predicate(np.asarray(y, float) / float(scale)))

    def describe(self) -> str:
        return self.name


def _exact_root(value: Fraction, d: int):
    """Return value ** (1/d) as a Fraction when it is exact, else a float."""
    if d == 1:
        return value
    num = round(value.numerator ** (1.0 / d))
    den = round(value.denominator ** (1.0 / d))
    for a in (num - 1, num, num + 1):
        for b in (den - 1, den, den + 1):
            if a > 0 and b > 0 and Fraction(a, b) ** d == value:
                return Fraction(a, b)
    return float(value) ** (1.0 / d)


def _as_fraction(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    f = Fraction(str(float(x)))
    return f


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Immutable description of Omega_N with its boundary structure.

    Attributes
    ----------
    sites : (M, d) int array, lexicographically sorted.
    neighbors : (M, 2d) int array; entry k is the index of the neighbour in
        direction k (axis k // 2, sign -1 for even k, +1 for odd k), or -1 if
        that neighbour lies outside Omega_N.
    exit_multiplicity : (M,) int array, r_b for boundary sites and 0 inside.
    """

    dimension: int
    n_particles: int
    density: float
    scale: float | Fraction
    region: Region
    sites: np.ndarray
    neighbors: np.ndarray
    exit_multiplicity: np.ndarray
    index: dict = field(repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def L(self) -> float:
        return float(self.scale)

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.exit_multiplicity > 0)

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.exit_multiplicity == 0)

    def site_index(self, y: Sequence[int]) -> int:
        return self.index[tuple(int(c) for c in y)]

    def macro_coordinates(self) -> np.ndarray:
        """Site positions y / L_N in macroscopic units, shape (M, d)."""
        return self.sites / self.L

    def bonds(self) -> np.ndarray:
        """Unordered nearest-neighbour pairs (i, j), i < j, inside Omega_N."""
        out = []
        for i, row in enumerate(self.neighbors):
            for j in row:
                if j > i:
                    out.append((i, j))
        return np.asarray(out, dtype=np.int64).reshape(-1, 2)

    def ordered_pairs(self) -> np.ndarray:
        """Ordered nearest-neighbour pairs (x, y), lexicographic in (x, y)."""
        b = self.bonds()
        pairs = np.concatenate([b, b[:, ::-1]]) if len(b) else b
        order = np.lexsort((pairs[:, 1], pairs[:, 0])) if len(pairs) else []
        return pairs[order]

    def inside_degree(self) -> np.ndarray:
        return (self.neighbors >= 0).sum(axis=1)

    def to_text(self) -> str:
        """Plain-text description used for golden files."""
        lines = [
            f"dimension {self.dimension}",
            f"particles {self.n_particles}",
            f"density {self.density!r}",
            f"scale {self.scale}",
            f"region {getattr(self.region, 'describe', lambda: '?')()}",
            f"sites {self.n_sites}",
        ]
        for i, y in enumerate(self.sites):
            tag = "B" if self.exit_multiplicity[i] > 0 else "I"
            coords = " ".join(str(int(c)) for c in y)
            lines.append(f"{i} {coords} {tag} {int(self.exit_multiplicity[i])}")
        return "\n".join(lines) + "\n"


def build_lattice(d: int, N: int, nu: float = 1.0, region: Region | None = None) -> LatticeGeometry:
    """Build Omega_N = Z^d ∩ (L_N Omega) with its boundary/interior split."""
    if d < 1:
        raise ValueError(f"dimension d={d} must be >= 1")
    if N < 2:
        raise ValueError(f"particle count N={N} must be >= 2")
    if not nu > 0:
        raise ValueError(f"density nu={nu} must be positive")
    region = UnitCube(d) if region is None else region
    if region.dimension != d:
        raise ValueError(f"region dimension {region.dimension} does not match d={d}")

    scale = _exact_root(Fraction(N) / _as_fraction(nu), d)
    lo, hi = region.bounds()
    Lf = float(scale)
    ranges = [
        range(math.floor(Lf * lo[k]) - 1, math.ceil(Lf * hi[k]) + 2) for k in range(d)
    ]
    sites = [y for y in itertools.product(*ranges) if region.contains_scaled(y, scale)]
    if not sites:
        raise ValueError(
            f"Omega_N is empty for d={d}, N={N}, nu={nu}: increase N or decrease nu"
        )
    index = {y: i for i, y in enumerate(sites)}
    M = len(sites)
    nbrs = np.full((M, 2 * d), -1, dtype=np.int64)
    for i, y in enumerate(sites):
        for k in range(d):
            for s, sign in enumerate((-1, 1)):
                z = list(y)
                z[k] += sign
                nbrs[i, 2 * k + s] = index.get(tuple(z), -1)
    r = (nbrs < 0).sum(axis=1).astype(np.int64)
    return LatticeGeometry(
        dimension=d,
        n_particles=N,
        density=float(nu),
        scale=scale,
        region=region,
        sites=np.asarray(sites, dtype=np.int64).reshape(M, d),
        neighbors=nbrs,
        exit_multiplicity=r,
        index=index,
    )


def _check_field(g: LatticeGeometry, f) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[0] != g.n_sites:
        raise ValueError(f"site field has length {f.shape[0]}, geometry has {g.n_sites} sites")
    return f


def discrete_laplacian(g: LatticeGeometry, f) -> np.ndarray:
    """(Δf)_x = Σ'(f_y - f_x) over nearest neighbours y of x inside Omega_N."""
    f = _check_field(g, f)
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    for k in range(g.neighbors.shape[1]):
        j = g.neighbors[:, k]
        ok = j >= 0
        out[ok] += f[j[ok]] - f[ok]
    return out


def laplacian_matrix(g: LatticeGeometry) -> sp.csr_matrix:
    """Sparse matrix of the discrete Laplacian on all of Omega_N."""
    b = g.bonds()
    M = g.n_sites
    if len(b) == 0:
        return sp.csr_matrix((M, M))
    i, j = b[:, 0], b[:, 1]
    A = sp.coo_matrix((np.ones(len(b)), (i, j)), shape=(M, M))
    A = (A + A.T).tocsr()
    return (A - sp.diags(g.inside_degree().astype(float))).tocsr()


def interior_laplacian_matrix(g: LatticeGeometry) -> sp.csr_matrix:
    """Laplacian restricted to interior sites with zero data on the boundary."""
    idx = g.interior
    return laplacian_matrix(g)[idx][:, idx].tocsr()
