"""Occupation-number bases and ladder operators on truncated Fock spaces.

Basis vectors psi(n) are ordered lexicographically in the occupation tuple n,
the same order the classical generator uses for configurations, so diagonal
operators and classical functions share one index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..classical.generator import enumerate_states

FERMION = "fermion"
BOSON = "boson"
MAX_DIM = 20_000


@dataclass(frozen=True)
class FockSpace:
    """Truncated Fock space over ``n_sites`` modes.

    Fermions take occupations {0, 1}; bosons {0, ..., n_max}.  Creation on a
    capped boson mode gives zero.
    """

    statistics: str
    n_sites: int
    n_max: int = 1

    def __post_init__(self):
        if self.statistics not in (FERMION, BOSON):
            raise ValueError(f"unknown statistics {self.statistics!r}")
        if self.statistics == FERMION:
            object.__setattr__(self, "n_max", 1)
        if self.dim > MAX_DIM:
            raise ValueError(f"Fock dimension {self.local_dim}^{self.n_sites} = {self.dim} exceeds {MAX_DIM}")

    @property
    def local_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.local_dim ** self.n_sites

    @cached_property
    def basis(self) -> np.ndarray:
        """Occupation tuples, row i is n for basis vector i."""
        return enumerate_states(self.n_sites, self.local_dim, MAX_DIM)

    @cached_property
    def _weights(self) -> np.ndarray:
        return self.local_dim ** np.arange(self.n_sites - 1, -1, -1)

    def index_of(self, n) -> int:
        return int(np.asarray(n) @ self._weights)

    def _shift(self, x: int, delta: int, coeff: np.ndarray) -> sp.csr_matrix:
        """Matrix sending psi(n) to coeff(n) psi(n with n_x += delta)."""
        occ = self.basis[:, x]
        ok = (occ + delta >= 0) & (occ + delta <= self.n_max) & (coeff != 0)
        src = np.flatnonzero(ok)
        dst = src + delta * self._weights[x]
        return sp.csr_matrix((coeff[ok].astype(complex), (dst, src)), shape=(self.dim, self.dim))

    def _sign(self, x: int) -> np.ndarray:
        """Jordan-Wigner string (-1)^{Σ_{y<x} n_y}; identically 1 for bosons."""
        if self.statistics == BOSON:
            return np.ones(self.dim)
        return (-1.0) ** self.basis[:, :x].sum(axis=1)

    def annihilation(self, x: int) -> sp.csr_matrix:
        occ = self.basis[:, x].astype(float)
        return self._shift(x, -1, self._sign(x) * np.sqrt(occ))

    def creation(self, x: int) -> sp.csr_matrix:
        return self.annihilation(x).conj().T.tocsr()

    def number(self, x: int) -> sp.csr_matrix:
        return sp.diags(self.basis[:, x].astype(complex)).tocsr()

    def bounded_annihilation(self, x: int) -> sp.csr_matrix:
        """alpha_x psi(n) = (1 - δ_{n_x,0}) psi(n^{x,-})."""
        if self.statistics != BOSON:
            raise ValueError("bounded ladder operators are defined for bosons")
        return self._shift(x, -1, np.ones(self.dim))

    def bounded_creation(self, x: int) -> sp.csr_matrix:
        """alpha_x^* psi(n) = psi(n^{x,+}), zero on the capped state."""
        return self.bounded_annihilation(x).conj().T.tocsr()

    def diagonal(self, values) -> sp.csr_matrix:
        """F(n̂) for a function given by its values on the basis."""
        values = np.asarray(values)
        if values.shape != (self.dim,):
            raise ValueError(f"need {self.dim} values, got shape {values.shape}")
        return sp.diags(values.astype(complex)).tocsr()

    def function_of_number(self, x: int, f) -> sp.csr_matrix:
        """f(n̂_x) for f given as a table over {0..n_max} or a callable."""
        table = np.array([f(k) for k in range(self.local_dim)]) if callable(f) else np.asarray(f)
        return sp.diags(table[self.basis[:, x]].astype(complex)).tocsr()


def build_basis(space: FockSpace) -> np.ndarray:
    return space.basis


def ladder_ops(space: FockSpace) -> dict:
    """{'a': [a_x], 'adag': [a_x^*], 'n': [n̂_x]} for every site."""
    M = space.n_sites
    return {
        "a": [space.annihilation(x) for x in range(M)],
        "adag": [space.creation(x) for x in range(M)],
        "n": [space.number(x) for x in range(M)],
    }


def bounded_boson_ops(space: FockSpace) -> dict:
    M = space.n_sites
    return {
        "alpha": [space.bounded_annihilation(x) for x in range(M)],
        "alphadag": [space.bounded_creation(x) for x in range(M)],
    }


def gauge_unitary(space: FockSpace, theta) -> sp.csr_matrix:
    """U(θ) = exp(i Σ_x θ_x n̂_x), diagonal in the number basis."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (space.n_sites,):
        raise ValueError(f"phase field must have {space.n_sites} entries")
    return sp.diags(np.exp(1j * (space.basis @ theta))).tocsr()


def gauge_automorphism(space: FockSpace, theta, A):
    """γ(θ)A = U(θ) A U(θ)^{-1}."""
    U = gauge_unitary(space, theta)
    return U @ A @ U.conj().T


def gauge_average(A):
    """Mean of γ(θ)A over all phases: keeps the diagonal in the number basis."""
    if sp.issparse(A):
        return sp.diags(A.diagonal()).tocsr()
    return np.diag(np.diag(A))
