"""Explicit generator matrices on small configuration spaces."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from ..lattice import LatticeGeometry
from .model import SEP, ClassicalModelSpec

MAX_STATES = 20_000


class StateSpaceTooLarge(ValueError):
    pass


class NonUniqueStationaryState(RuntimeError):
    pass


def enumerate_states(n_sites: int, alphabet_size: int, max_states: int = MAX_STATES) -> np.ndarray:
    """All configurations in lexicographic order, shape (K^M, M).

    Site 0 is the most significant digit, so index(n) = Σ n_x K^(M-1-x).
    """
    n = alphabet_size ** n_sites
    if n > max_states:
        raise StateSpaceTooLarge(
            f"{alphabet_size}^{n_sites} = {n} configurations exceeds the guard {max_states}"
        )
    idx = np.arange(n)
    weights = alphabet_size ** np.arange(n_sites - 1, -1, -1)
    return (idx[:, None] // weights[None, :]) % alphabet_size


def state_index(states: np.ndarray, alphabet_size: int) -> np.ndarray:
    M = states.shape[-1]
    weights = alphabet_size ** np.arange(M - 1, -1, -1)
    return states @ weights


def build_generator_matrix(spec: ClassicalModelSpec, geom: LatticeGeometry,
                           max_states: int = MAX_STATES) -> sp.csr_matrix:
    """Sparse Q with Q[n, n'] the rate of n -> n' and zero row sums.

    Acting on functions, (G f)(n) = (Q f)(n) = Σ rate (f(n') - f(n)); acting on
    measures, the stationary law solves π Q = 0.
    """
    K = spec.alphabet_size
    M = geom.n_sites
    S = enumerate_states(M, K, max_states)
    n = len(S)
    src = np.arange(n)
    weights = K ** np.arange(M - 1, -1, -1)
    h = spec.boundary_rates(geom)
    r = geom.exit_multiplicity
    g = spec.g_table()
    cap = spec.cap
    rows, cols, vals = [], [], []

    def add(mask, rate, shift):
        rate = np.broadcast_to(rate, mask.shape)
        keep = mask & (rate > 0)
        rows.append(src[keep])
        cols.append(src[keep] + shift)
        vals.append(rate[keep])

    for x, y in geom.ordered_pairs():
        ok = (S[:, x] >= 1) & (S[:, y] + 1 <= cap)
        rate = 1.0 if spec.variant == SEP else g[S[:, x]]
        add(ok, rate, weights[y] - weights[x])
    for b in geom.boundary:
        out_rate = r[b] * (1.0 if spec.variant == SEP else g[S[:, b]])
        add(S[:, b] >= 1, out_rate, -weights[b])
        add(S[:, b] + 1 <= cap, h[b], weights[b])

    rows = np.concatenate(rows) if rows else np.zeros(0, int)
    cols = np.concatenate(cols) if cols else np.zeros(0, int)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    Q = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    Q = Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())
    return Q.tocsr()


def closed_class_count(Q) -> int:
    """Number of closed communicating classes of the chain with rate matrix Q."""
    Q = sp.csr_matrix(Q)
    off = Q - sp.diags(Q.diagonal())
    off.eliminate_zeros()
    n_comp, labels = connected_components(off, directed=True, connection="strong")
    coo = off.tocoo()
    leaves = labels[coo.row] != labels[coo.col]
    open_classes = np.unique(labels[coo.row[leaves]])
    return n_comp - len(open_classes)


def stationary_distribution(Q, dense_limit: int = 2000) -> np.ndarray:
    """Normalized π ≥ 0 with π Q = 0.

    Raises NonUniqueStationaryState when the chain has more than one closed
    class (the null space is then multidimensional).
    """
    Q = sp.csr_matrix(Q)
    n = Q.shape[0]
    classes = closed_class_count(Q)
    if classes != 1:
        raise NonUniqueStationaryState(f"generator has {classes} closed classes; null space dimension {classes}")
    if n <= dense_limit:
        ns = sla.null_space(Q.toarray().T, rcond=1e-12)
        if ns.shape[1] != 1:
            raise NonUniqueStationaryState(f"null space dimension {ns.shape[1]}")
        pi = ns[:, 0]
    else:
        A = Q.T.tolil()
        A[n - 1, :] = np.ones(n)
        rhs = np.zeros(n)
        rhs[n - 1] = 1.0
        pi = spla.spsolve(A.tocsc(), rhs)
    pi = np.clip(pi / pi.sum(), 0.0, None)
    return pi / pi.sum()


def marginals(pi: np.ndarray, n_sites: int, alphabet_size: int) -> np.ndarray:
    """Per-site marginal laws, shape (M, K)."""
    P = pi.reshape((alphabet_size,) * n_sites)
    out = np.empty((n_sites, alphabet_size))
    for x in range(n_sites):
        axes = tuple(a for a in range(n_sites) if a != x)
        out[x] = P.sum(axis=axes)
    return out


def product_vector(marg: np.ndarray) -> np.ndarray:
    """Joint law (lexicographic) of independent sites with the given marginals."""
    out = np.ones(1)
    for m in marg:
        out = np.kron(out, m)
    return out


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
