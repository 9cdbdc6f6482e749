"""Classical exclusion and zero-range models: specs, events and exact trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..lattice import LatticeGeometry

SEP = "sep"
ZRP = "zrp"


def two_point_reservoir(h_left: float, h_right: float) -> Callable[[np.ndarray], float]:
    """Reservoir function on the boundary of (0, 1).

    A site b is sampled at b / L_N, which lies strictly inside (0, 1); it takes
    the value of the nearer end point.
    """
    def h(x):
        return h_left if float(np.ravel(x)[0]) < 0.5 else h_right

    h.values = (float(h_left), float(h_right))
    return h


def unit_rate(k: int) -> float:
    """g(k) = 1 for k >= 1, the simplest zero-range rate."""
    return 1.0 if k >= 1 else 0.0


@dataclass(frozen=True)
class ClassicalModelSpec:
    """Boundary-driven exclusion (``sep``) or zero-range (``zrp``) model.

    ``h`` is the entry-rate function evaluated at b / L_N; a pair
    ``(h_left, h_right)`` is accepted for d = 1.  For the zero-range model
    ``g`` gives the departure rate g(n) (callable or table indexed by n) and
    ``n_max`` caps the occupation alphabet {0, ..., n_max}; entries and hops
    into a capped site are suppressed.
    """

    variant: str
    h: Callable | tuple
    g: Callable | Sequence[float] | None = None
    n_max: int = 6
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.variant not in (SEP, ZRP):
            raise ValueError(f"unknown variant {self.variant!r}; expected 'sep' or 'zrp'")
        if isinstance(self.h, (tuple, list)):
            object.__setattr__(self, "h", two_point_reservoir(*self.h))
        if self.variant == ZRP:
            if self.g is None:
                object.__setattr__(self, "g", unit_rate)
            if self.n_max < 1:
                raise ValueError(f"n_max={self.n_max} must be >= 1")
            gt = self.g_table()
            if gt[0] != 0.0:
                raise ValueError("zero-range rate must satisfy g(0) = 0")
            if np.any(gt[1:] <= 0):
                raise ValueError("zero-range rate must be positive for n >= 1")
            if not np.all(np.isfinite(np.diff(gt))):
                raise ValueError("zero-range rate increments must be finite")

    # constructors ---------------------------------------------------------
    @classmethod
    def sep(cls, h, label: str = "") -> "ClassicalModelSpec":
        return cls(SEP, h, label=label)

    @classmethod
    def sep_from_densities(cls, rho_left: float, rho_right: float, r: float = 1.0) -> "ClassicalModelSpec":
        """Exclusion model whose reservoirs hold the given densities.

        With exit rate r per missing neighbour a boundary site equilibrates at
        h / (h + r), so the entry rate is chosen as h = r rho / (1 - rho).
        """
        for rho in (rho_left, rho_right):
            if not 0 < rho < 1:
                raise ValueError(f"reservoir density {rho} must lie in (0, 1)")
        h = two_point_reservoir(r * rho_left / (1 - rho_left), r * rho_right / (1 - rho_right))
        h.densities = (float(rho_left), float(rho_right))
        return cls(SEP, h, label=f"sep rho=({rho_left},{rho_right})")

    @classmethod
    def zrp(cls, h, g=None, n_max: int = 6, label: str = "") -> "ClassicalModelSpec":
        return cls(ZRP, h, g=g, n_max=n_max, label=label)

    # derived quantities ---------------------------------------------------
    @property
    def alphabet_size(self) -> int:
        return 2 if self.variant == SEP else self.n_max + 1

    @property
    def cap(self) -> int:
        return self.alphabet_size - 1

    def g_table(self, n_max: int | None = None) -> np.ndarray:
        n_max = self.cap if n_max is None else n_max
        if self.variant == SEP:
            return np.array([0.0, 1.0])
        if callable(self.g):
            return np.array([float(self.g(k)) for k in range(n_max + 1)])
        table = np.asarray(self.g, dtype=float)
        if len(table) < n_max + 1:
            raise ValueError(f"g table has {len(table)} entries, need {n_max + 1}")
        return table[: n_max + 1].copy()

    def boundary_rates(self, geom: LatticeGeometry) -> np.ndarray:
        """h(b / L_N) at boundary sites, 0 at interior sites."""
        out = np.zeros(geom.n_sites)
        xs = geom.macro_coordinates()
        for b in geom.boundary:
            out[b] = float(self.h(xs[b]))
            if not out[b] > 0:
                raise ValueError(f"reservoir rate at site {tuple(geom.sites[b])} is {out[b]}, must be > 0")
        return out

    def reservoir_values(self, geom: LatticeGeometry | None = None) -> tuple[float, float]:
        """Macroscopic boundary data Phi(q) at x = 0 and x = 1 (d = 1).

        Exclusion: the reservoir density h / (h + r); zero range: the
        fugacity h / r, with r = 1 the exit multiplicity of an end site.
        """
        if hasattr(self.h, "values"):
            h0, h1 = self.h.values
        else:
            h0, h1 = float(self.h(np.array([0.0]))), float(self.h(np.array([1.0])))
        if self.variant == SEP:
            return h0 / (h0 + 1.0), h1 / (h1 + 1.0)
        return h0, h1

    def validate(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.int64)
        if np.any(c < 0) or np.any(c > self.cap):
            raise ValueError(f"configuration has occupancies outside {{0..{self.cap}}}")
        return c


class Event(NamedTuple):
    kind: str  # "bulk" | "exit" | "entry"
    x: int
    y: int  # target site for bulk jumps, -1 otherwise
    rate: float


def event_rates(c, spec: ClassicalModelSpec, geom: LatticeGeometry) -> list[Event]:
    """Non-zero-rate transitions out of configuration ``c``."""
    c = spec.validate(c)
    h = spec.boundary_rates(geom)
    r = geom.exit_multiplicity
    events = []
    if spec.variant == SEP:
        for x, y in geom.ordered_pairs():
            if c[x] == 1 and c[y] == 0:
                events.append(Event("bulk", int(x), int(y), 1.0))
        for b in geom.boundary:
            if c[b] == 1:
                events.append(Event("exit", int(b), -1, float(r[b])))
            else:
                events.append(Event("entry", int(b), -1, float(h[b])))
        return events

    g = spec.g_table()
    cap = spec.cap
    for x, y in geom.ordered_pairs():
        if c[x] > 0 and c[y] < cap:
            events.append(Event("bulk", int(x), int(y), float(g[c[x]])))
    for b in geom.boundary:
        if c[b] > 0:
            events.append(Event("exit", int(b), -1, float(r[b] * g[c[b]])))
        if c[b] < cap:
            events.append(Event("entry", int(b), -1, float(h[b])))
    return events


def apply_event(c, e: Event, spec: ClassicalModelSpec) -> np.ndarray:
    """Return n^{x,y}, n^{b,-} or n^{b,+}; inadmissible transfers leave c unchanged."""
    out = np.array(c, dtype=np.int64, copy=True)
    cap = spec.cap
    if e.kind == "bulk":
        if out[e.x] >= 1 and out[e.y] + 1 <= cap:
            out[e.x] -= 1
            out[e.y] += 1
    elif e.kind == "exit":
        if out[e.x] >= 1:
            out[e.x] -= 1
    elif e.kind == "entry":
        if out[e.x] + 1 <= cap:
            out[e.x] += 1
    else:
        raise ValueError(f"unknown event kind {e.kind!r}")
    return out


def trajectory_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream for trajectory ``index`` of an ensemble seeded by ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(index)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Trajectory:
    initial: np.ndarray
    times: np.ndarray
    events: list
    t_end: float
    seed: int
    index: int = 0
    final: np.ndarray | None = None

    def replay(self, spec: ClassicalModelSpec) -> np.ndarray:
        c = self.initial.copy()
        for e in self.events:
            c = apply_event(c, e, spec)
        return c

    def occupation_time_average(self, spec: ClassicalModelSpec, t_start: float = 0.0) -> np.ndarray:
        """Exact time average of n over [t_start, t_end]."""
        c = self.initial.astype(float)
        acc = np.zeros_like(c)
        t_prev = 0.0
        for t, e in zip(np.append(self.times, self.t_end), self.events + [None]):
            lo = max(t_prev, t_start)
            if t > lo:
                acc += (t - lo) * c
            if e is not None:
                c = apply_event(c, e, spec).astype(float)
            t_prev = t
        return acc / (self.t_end - t_start)


def simulate(c0, spec: ClassicalModelSpec, geom: LatticeGeometry, t_end: float,
             seed: int, index: int = 0) -> Trajectory:
    """Exact continuous-time simulation by the direct method.

    Waiting times are exponential with the total rate; the next event is
    picked by a linear scan over the cumulative rates.
    """
    if not t_end > 0:
        raise ValueError(f"t_end={t_end} must be positive")
    rng = trajectory_rng(seed, index)
    c = spec.validate(c0).copy()
    t = 0.0
    times, events = [], []
    while True:
        evs = event_rates(c, spec, geom)
        total = sum(e.rate for e in evs)
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t >= t_end:
            break
        target = rng.random() * total
        acc = 0.0
        chosen = evs[-1]
        for e in evs:
            acc += e.rate
            if target < acc:
                chosen = e
                break
        c = apply_event(c, chosen, spec)
        times.append(t)
        events.append(chosen)
    return Trajectory(
        initial=spec.validate(c0).copy(),
        times=np.asarray(times),
        events=events,
        t_end=float(t_end),
        seed=int(seed),
        index=int(index),
        final=c,
    )
