"""Lindblad generators of the quantum exclusion and zero-range models.

Superoperators act on column-stacked matrices, vec(A X B) = (B^T ⊗ A) vec(X).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..classical.generator import build_generator_matrix, stationary_distribution
from ..classical.model import SEP, ClassicalModelSpec
from ..lattice import LatticeGeometry
from .fock import BOSON, FERMION, FockSpace, gauge_unitary

# largest Hilbert dimension for which superoperators are built densely
DENSE_DIM = 32


class ToleranceBreach(RuntimeError):
    pass


@dataclass
class LindbladModel:
    space: FockSpace
    H: sp.csr_matrix
    jumps: list
    tags: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.space.dim

    def loss(self) -> sp.csr_matrix:
        """Σ_j V_j^* V_j."""
        K = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for V in self.jumps:
            K = K + V.conj().T @ V
        return K

    def dense_jumps(self) -> list:
        if getattr(self, "_dense", None) is None or len(self._dense) != len(self.jumps):
            self._dense = [V.toarray() for V in self.jumps]
        return self._dense

    def with_extra_jump(self, V, tag=("extra",)) -> "LindbladModel":
        return LindbladModel(self.space, self.H, self.jumps + [sp.csr_matrix(V)], self.tags + [tag])

    def scaled_jump(self, j: int, factor: float) -> "LindbladModel":
        jumps = list(self.jumps)
        jumps[j] = jumps[j] * np.sqrt(factor)
        return LindbladModel(self.space, self.H, jumps, list(self.tags))


def fock_space_for(spec: ClassicalModelSpec, geom: LatticeGeometry) -> FockSpace:
    if spec.variant == SEP:
        return FockSpace(FERMION, geom.n_sites)
    return FockSpace(BOSON, geom.n_sites, spec.n_max)


def assemble_lindblad(spec: ClassicalModelSpec, geom: LatticeGeometry,
                      space: FockSpace | None = None) -> LindbladModel:
    """H = 0 and one jump operator per ordered bond plus two per boundary site.

    Exclusion (fermions): a_y^* a_x, r_b^{1/2} a_b, h_b^{1/2} a_b^*.
    Zero range (bosons): α_y^* α_x g(n̂_x)^{1/2}, r_b^{1/2} α_b g(n̂_b)^{1/2},
    h_b^{1/2} α_b^*.
    """
    space = fock_space_for(spec, geom) if space is None else space
    expected = FERMION if spec.variant == SEP else BOSON
    if space.statistics != expected:
        raise ValueError(f"{spec.variant} model needs {expected} statistics, got {space.statistics}")
    if space.n_sites != geom.n_sites or space.n_max != spec.cap:
        raise ValueError("Fock space does not match the classical model")
    h = spec.boundary_rates(geom)
    r = geom.exit_multiplicity
    jumps, tags = [], []
    if spec.variant == SEP:
        a = [space.annihilation(x) for x in range(geom.n_sites)]
        ad = [space.creation(x) for x in range(geom.n_sites)]
        for x, y in geom.ordered_pairs():
            jumps.append(ad[y] @ a[x])
            tags.append(("bulk", int(x), int(y)))
        for b in geom.boundary:
            jumps.append(np.sqrt(r[b]) * a[b])
            tags.append(("exit", int(b)))
            jumps.append(np.sqrt(h[b]) * ad[b])
            tags.append(("entry", int(b)))
    else:
        g = spec.g_table()
        al = [space.bounded_annihilation(x) for x in range(geom.n_sites)]
        ald = [space.bounded_creation(x) for x in range(geom.n_sites)]
        sqrt_g = [space.function_of_number(x, np.sqrt(g)) for x in range(geom.n_sites)]
        for x, y in geom.ordered_pairs():
            jumps.append(ald[y] @ al[x] @ sqrt_g[x])
            tags.append(("bulk", int(x), int(y)))
        for b in geom.boundary:
            jumps.append(np.sqrt(r[b]) * (al[b] @ sqrt_g[b]))
            tags.append(("exit", int(b)))
            jumps.append(np.sqrt(h[b]) * ald[b])
            tags.append(("entry", int(b)))
    H = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    return LindbladModel(space, H, [sp.csr_matrix(V) for V in jumps], tags)


def _as_matrix(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


def heisenberg_generator(L: LindbladModel, A):
    """G(A) = i[H, A] + Σ_j (V_j^* A V_j - ½{V_j^* V_j, A})."""
    A = _as_matrix(A).astype(complex)
    H = L.H.toarray()
    out = 1j * (H @ A - A @ H)
    for V in L.dense_jumps():
        Vd = V.conj().T
        K = Vd @ V
        out += Vd @ A @ V - 0.5 * (K @ A + A @ K)
    return out


def schrodinger_generator(L: LindbladModel, rho):
    """G*(ρ) = -i[H, ρ] + Σ_j (V_j ρ V_j^* - ½{V_j^* V_j, ρ})."""
    rho = _as_matrix(rho).astype(complex)
    H = L.H.toarray()
    out = -1j * (H @ rho - rho @ H)
    for V in L.dense_jumps():
        Vd = V.conj().T
        K = Vd @ V
        out += V @ rho @ Vd - 0.5 * (K @ rho + rho @ K)
    return out


def _kron(A, B):
    return sp.kron(A, B, format="csr")


def schrodinger_superoperator(L: LindbladModel) -> sp.csr_matrix:
    D = L.dim
    I = sp.identity(D, dtype=complex, format="csr")
    K = L.loss()
    S = -1j * (_kron(I, L.H) - _kron(L.H.T, I)) - 0.5 * (_kron(I, K) + _kron(K.T, I))
    for V in L.jumps:
        S = S + _kron(V.conj(), V)
    return S.tocsr()


def heisenberg_superoperator(L: LindbladModel) -> sp.csr_matrix:
    D = L.dim
    I = sp.identity(D, dtype=complex, format="csr")
    K = L.loss()
    S = 1j * (_kron(I, L.H) - _kron(L.H.T, I)) - 0.5 * (_kron(I, K) + _kron(K.T, I))
    for V in L.jumps:
        S = S + _kron(V.T, V.conj().T)
    return S.tocsr()


def vec(A) -> np.ndarray:
    return _as_matrix(A).reshape(-1, order="F")


def unvec(v, D: int) -> np.ndarray:
    return np.asarray(v).reshape((D, D), order="F")


def check_density_matrix(rho, trace_tol: float = 1e-9, eig_tol: float = 1e-8) -> dict:
    rho = _as_matrix(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    tr = complex(np.trace(rho))
    evmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return {
        "hermiticity": herm,
        "trace_error": abs(tr - 1.0),
        "min_eigenvalue": evmin,
        "ok": herm < trace_tol and abs(tr - 1) < trace_tol and evmin >= -eig_tol,
    }


def evolve(L: LindbladModel, rho0, t: float, trace_tol: float = 1e-9, eig_tol: float = 1e-8) -> np.ndarray:
    """ρ_t = exp(t G*) ρ_0, checked for trace and positivity."""
    if t < 0:
        raise ValueError("evolution is defined for t >= 0 only")
    rho0 = _as_matrix(rho0).astype(complex)
    if t == 0:
        return rho0.copy()
    S = schrodinger_superoperator(L)
    if L.dim <= DENSE_DIM:
        v = sla.expm(t * S.toarray()) @ vec(rho0)
    else:
        v = spla.expm_multiply(t * S.tocsc(), vec(rho0))
    rho = unvec(v, L.dim)
    report = check_density_matrix(rho, trace_tol, eig_tol)
    if report["trace_error"] > trace_tol or report["min_eigenvalue"] < -eig_tol:
        raise ToleranceBreach(f"evolution left the state space: {report}")
    return rho


@dataclass
class StationaryResult:
    rho: np.ndarray
    null_dimension: int
    commutant_dimension: int
    residual: float
    hermitization_shift: float
    candidates: list = field(default_factory=list)

    @property
    def unique(self) -> bool:
        return self.null_dimension == 1 and self.commutant_dimension == 1


def commutant_dimension(L: LindbladModel, rtol: float = 1e-9) -> int:
    """Dimension of {X : [X, S] = 0 for S in H, V_j, V_j^*}."""
    D = L.dim
    I = sp.identity(D, dtype=complex, format="csr")
    ops = [L.H] + list(L.jumps) + [V.conj().T.tocsr() for V in L.jumps]
    gram = sp.csr_matrix((D * D, D * D), dtype=complex)
    for S in ops:
        if S.nnz == 0:
            continue
        C = _kron(I, S) - _kron(S.T, I)  # vec([S, X])
        gram = gram + C.conj().T @ C
    ev = np.linalg.eigvalsh(gram.toarray())
    return int(np.sum(ev <= rtol * max(1.0, ev.max())))


def stationary_state(L: LindbladModel, certify: bool = True) -> StationaryResult:
    """Null vector of G* reshaped, Hermitized, clipped and normalized."""
    D = L.dim
    S = schrodinger_superoperator(L)
    if D * D <= 4096:
        ns = sla.null_space(S.toarray(), rcond=1e-10)
        null_dim = ns.shape[1]
        cands = []
        for k in range(null_dim):
            m = unvec(ns[:, k], D)
            m = m / np.trace(m) if abs(np.trace(m)) > 1e-12 else m
            cands.append(m)
        if null_dim == 0:
            raise ToleranceBreach("superoperator has no numerical null vector")
        rho = cands[0]
    else:
        # trace condition replaces one equation
        A = S.tolil()
        A[0, :] = vec(np.eye(D)).conj()
        rhs = np.zeros(D * D, dtype=complex)
        rhs[0] = 1.0
        rho = unvec(spla.spsolve(A.tocsc(), rhs), D)
        null_dim = 1
        cands = [rho]
    raw = rho
    rho = 0.5 * (rho + rho.conj().T)
    w, U = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    rho = (U * w) @ U.conj().T
    rho = rho / np.trace(rho).real
    shift = float(np.abs(rho - raw).max())
    resid = float(np.abs(schrodinger_generator(L, rho)).max())
    cdim = commutant_dimension(L) if certify else -1
    return StationaryResult(rho, null_dim, cdim, resid, shift, cands)


def check_classical_restriction(L: LindbladModel, spec: ClassicalModelSpec, geom: LatticeGeometry) -> float:
    """max |G(F(n̂)) - (G_cl F)(n̂)| over indicator functions F of configurations."""
    Q = build_generator_matrix(spec, geom).toarray()
    D = L.dim
    if Q.shape[0] != D:
        raise ValueError("classical and quantum state spaces differ")
    worst = 0.0
    for m in range(D):
        F = np.zeros(D)
        F[m] = 1.0
        GF = heisenberg_generator(L, np.diag(F))
        worst = max(worst, float(np.abs(GF - np.diag(Q @ F)).max()))
    return worst


def check_gauge_covariance(L: LindbladModel, thetas) -> float:
    """max over θ of ‖γ(θ)G(A) - G(γ(θ)A)‖_max, A over the matrix units."""
    S = heisenberg_superoperator(L).tocoo()
    worst = 0.0
    for theta in thetas:
        u = gauge_unitary(L.space, theta).diagonal()
        gam = np.kron(u.conj(), u)  # vec(U A U^*) = (conj(U) ⊗ U) vec(A)
        dev = np.abs(S.data * (gam[S.row] - gam[S.col]))
        worst = max(worst, float(dev.max()) if dev.size else 0.0)
    return worst


def lift_state(pi, L: LindbladModel | None = None, tol: float = 1e-9) -> np.ndarray:
    """Diagonal density matrix with the classical stationary law on the diagonal."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < -1e-15) or abs(pi.sum() - 1) > 1e-10:
        raise ValueError("lift needs a probability vector")
    rho = np.diag(pi).astype(complex)
    if L is not None:
        res = float(np.abs(schrodinger_generator(L, rho)).max())
        if res > tol:
            raise ToleranceBreach(f"lifted state is not stationary: ‖G*(ρ)‖_max = {res:.3e}")
    return rho


def classical_stationary(spec: ClassicalModelSpec, geom: LatticeGeometry) -> np.ndarray:
    return stationary_distribution(build_generator_matrix(spec, geom))


def diagonal_leak(L: LindbladModel, rng=None, n_trials: int = 4) -> float:
    """Largest off-diagonal entry of G*(ρ) over random diagonal ρ."""
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(n_trials):
        d = rng.random(L.dim)
        out = schrodinger_generator(L, np.diag(d / d.sum()))
        worst = max(worst, float(np.abs(out - np.diag(np.diag(out))).max()))
    return worst
