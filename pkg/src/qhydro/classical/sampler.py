"""Fast ensemble sampler for long stationary runs.

The continuous-time chain is realized by uniformization: proposals arrive as a
Poisson process with rate Λ = Σ_c max_rate(c) over a fixed channel list and
channel c fires with probability rate_c(n) / max_rate(c).  Between two
observation times only the number of proposals matters, so each sampling
interval draws one Poisson count and one uniform per proposal.  Exclusion
bulk moves use the stirring representation (each bond swaps its two
occupancies at rate 1), which has the same law as jumps at rate n_x(1-n_y).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from ..lattice import LatticeGeometry
from .model import SEP, ClassicalModelSpec, trajectory_rng

_EXIT, _ENTRY = 0, 1
# cap on proposals drawn per chunk (memory for the uniform buffer)
_CHUNK_PROPOSALS = 1 << 23


@dataclass(frozen=True)
class Channels:
    variant: int  # 0 exclusion, 1 zero range
    pairs: np.ndarray  # bonds (exclusion) or ordered pairs (zero range)
    bulk_max: float
    b_site: np.ndarray
    b_kind: np.ndarray
    b_max: np.ndarray
    g_ratio: np.ndarray
    cap: int

    @property
    def total_rate(self) -> float:
        return len(self.pairs) * self.bulk_max + float(self.b_max.sum())


def build_channels(spec: ClassicalModelSpec, geom: LatticeGeometry) -> Channels:
    h = spec.boundary_rates(geom)
    r = geom.exit_multiplicity.astype(float)
    g = spec.g_table()
    gmax = float(g.max())
    sites, kinds, maxes = [], [], []
    for b in geom.boundary:
        sites += [b, b]
        kinds += [_EXIT, _ENTRY]
        maxes += [r[b] * (1.0 if spec.variant == SEP else gmax), h[b]]
    if spec.variant == SEP:
        pairs, bulk_max, variant = geom.bonds(), 1.0, 0
    else:
        pairs, bulk_max, variant = geom.ordered_pairs(), gmax, 1
    return Channels(
        variant=variant,
        pairs=np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2),
        bulk_max=bulk_max,
        b_site=np.asarray(sites, dtype=np.int64),
        b_kind=np.asarray(kinds, dtype=np.int64),
        b_max=np.asarray(maxes, dtype=float),
        g_ratio=g / gmax,
        cap=spec.cap,
    )


@numba.njit(cache=True)
def _run_chunk(state, counts, u, variant, pairs, bulk_max, b_site, b_kind, b_max,
               g_ratio, cap, F, out_obs, out_total, occ_sum, snaps, store):
    n_pairs = pairs.shape[0]
    n_b = b_site.shape[0]
    bulk_total = n_pairs * bulk_max
    total = bulk_total
    for j in range(n_b):
        total += b_max[j]
    M = state.shape[0]
    n_obs = F.shape[1]
    pos = 0
    for i in range(counts.shape[0]):
        for _ in range(counts[i]):
            v = u[pos] * total
            pos += 1
            if v < bulk_total:
                q = v / bulk_max
                k = int(q)
                if k >= n_pairs:
                    k = n_pairs - 1
                x = pairs[k, 0]
                y = pairs[k, 1]
                if variant == 0:
                    t = state[x]
                    state[x] = state[y]
                    state[y] = t
                else:
                    frac = q - k
                    nx = state[x]
                    if nx > 0 and state[y] < cap and frac < g_ratio[nx]:
                        state[x] = nx - 1
                        state[y] += 1
            else:
                v -= bulk_total
                j = 0
                acc = b_max[0]
                while v >= acc and j < n_b - 1:
                    j += 1
                    acc += b_max[j]
                frac = (v - (acc - b_max[j])) / b_max[j]
                b = b_site[j]
                nb = state[b]
                if b_kind[j] == 0:
                    if nb > 0 and (variant == 0 or frac < g_ratio[nb]):
                        state[b] = nb - 1
                else:
                    if nb < cap:
                        state[b] = nb + 1
        tot = 0
        for x in range(M):
            tot += state[x]
            occ_sum[x] += state[x]
        out_total[i] = tot
        for k in range(n_obs):
            s = 0.0
            for x in range(M):
                s += F[x, k] * state[x]
            out_obs[i, k] = s
        if store:
            for x in range(M):
                snaps[i, x] = state[x]
    return pos


@dataclass
class EnsembleSamples:
    """Regularly spaced observations of an ensemble of independent trajectories.

    ``observables`` has shape (n_traj, n_samples, n_obs); ``total_number`` has
    shape (n_traj, n_samples); ``occupancy_mean`` is the per-trajectory mean
    occupation over the sampling times, shape (n_traj, M).
    """

    observables: np.ndarray
    total_number: np.ndarray
    occupancy_mean: np.ndarray
    dt: float
    t_burn: float
    seed: int
    snapshots: np.ndarray | None = None
    final_states: np.ndarray | None = None


def product_initial(profile, spec: ClassicalModelSpec) -> Callable:
    """Initial law: independent sites, Bernoulli(profile) for exclusion, and
    Poisson(profile) clipped at the cap for zero range."""
    profile = np.asarray(profile, dtype=float)

    def draw(rng):
        if spec.variant == SEP:
            return (rng.random(len(profile)) < profile).astype(np.int64)
        return np.minimum(rng.poisson(profile), spec.cap).astype(np.int64)

    return draw


def sample_ensemble(spec: ClassicalModelSpec, geom: LatticeGeometry, initial, *,
                    n_traj: int, n_samples: int, dt: float, t_burn: float = 0.0,
                    seed: int = 0, observables=None, store_snapshots: bool = False,
                    first_index: int = 0) -> EnsembleSamples:
    """Run ``n_traj`` independent trajectories and observe them every ``dt``.

    ``initial`` is a configuration or a callable ``rng -> configuration``.
    ``observables`` is an (M, n_obs) matrix; column k records Σ_x F[x, k] n_x.
    Times are microscopic.  Trajectory i uses the stream (seed, first_index + i).
    """
    if dt <= 0 or n_samples < 1:
        raise ValueError("need dt > 0 and n_samples >= 1")
    ch = build_channels(spec, geom)
    M = geom.n_sites
    F = np.zeros((M, 0)) if observables is None else np.ascontiguousarray(observables, dtype=float)
    if F.shape[0] != M:
        raise ValueError(f"observable matrix has {F.shape[0]} rows, lattice has {M} sites")
    Lam = ch.total_rate
    per_chunk = max(1, int(_CHUNK_PROPOSALS // max(Lam * dt, 1.0)))

    obs = np.empty((n_traj, n_samples, F.shape[1]))
    tot = np.empty((n_traj, n_samples), dtype=np.int64)
    occ = np.empty((n_traj, M))
    snaps_all = np.empty((n_traj, n_samples, M), dtype=np.int8) if store_snapshots else None
    finals = np.empty((n_traj, M), dtype=np.int64)
    dummy_snaps = np.empty((1, M), dtype=np.int8)

    for i in range(n_traj):
        rng = trajectory_rng(seed, first_index + i)
        state = initial(rng) if callable(initial) else np.array(initial, dtype=np.int64)
        state = np.ascontiguousarray(spec.validate(state).copy())
        if t_burn > 0:
            _advance(state, ch, rng, Lam * t_burn)
        occ_sum = np.zeros(M)
        done = 0
        while done < n_samples:
            m = min(per_chunk, n_samples - done)
            counts = rng.poisson(Lam * dt, size=m).astype(np.int64)
            u = rng.random(int(counts.sum()))
            sl = slice(done, done + m)
            snaps = snaps_all[i, sl] if store_snapshots else dummy_snaps
            _run_chunk(state, counts, u, ch.variant, ch.pairs, ch.bulk_max, ch.b_site,
                       ch.b_kind, ch.b_max, ch.g_ratio, ch.cap, F, obs[i, sl], tot[i, sl],
                       occ_sum, snaps, store_snapshots)
            done += m
        occ[i] = occ_sum / n_samples
        finals[i] = state
    return EnsembleSamples(observables=obs, total_number=tot, occupancy_mean=occ, dt=float(dt),
                           t_burn=float(t_burn), seed=int(seed), snapshots=snaps_all,
                           final_states=finals)


def _advance(state, ch: Channels, rng, mean_proposals: float) -> None:
    """Advance ``state`` in place by a time carrying ``mean_proposals`` expected proposals."""
    n = int(rng.poisson(mean_proposals))
    F = np.zeros((len(state), 0))
    while n > 0:
        m = min(n, _CHUNK_PROPOSALS)
        u = rng.random(m)
        _run_chunk(state, np.array([m], dtype=np.int64), u, ch.variant, ch.pairs, ch.bulk_max,
                   ch.b_site, ch.b_kind, ch.b_max, ch.g_ratio, ch.cap, F, np.empty((1, 0)),
                   np.empty(1, dtype=np.int64), np.zeros(len(state)), np.empty((1, len(state)), np.int8),
                   False)
        n -= m
