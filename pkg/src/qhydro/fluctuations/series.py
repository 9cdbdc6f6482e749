"""Time series of fluctuation-field observables, from the lattice or the OU grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SampledFunction:
    """A function known only through its samples (e.g. T_t* f on the grid)."""

    id: str
    values: np.ndarray

    def on_lattice(self, geom) -> np.ndarray:
        if len(self.values) != geom.n_sites:
            raise ValueError(f"{self.id}: {len(self.values)} samples for {geom.n_sites} sites")
        return np.asarray(self.values, dtype=float)

    def on_grid(self, grid) -> np.ndarray:
        if len(self.values) != grid.n_interior:
            raise ValueError(f"{self.id}: {len(self.values)} samples for {grid.n_interior} nodes")
        return np.asarray(self.values, dtype=float)


@dataclass
class FieldSeries:
    """ξ observables sampled every ``dt`` macroscopic time units.

    ``xi[name]`` has shape (n_traj, n_time).
    """

    xi: dict
    dt: float
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name) -> np.ndarray:
        if name not in self.xi:
            raise KeyError(f"observable {name!r} was not recorded; have {sorted(self.xi)}")
        return self.xi[name]

    def lag_samples(self, tau: float) -> int:
        k = int(round(tau / self.dt))
        if abs(k * self.dt - tau) > 1e-9 * max(tau, self.dt):
            raise ValueError(f"lag {tau} is not a multiple of the sampling step {self.dt}")
        return k

    def subsample(self, every: int) -> "FieldSeries":
        return FieldSeries({k: v[:, ::every] for k, v in self.xi.items()}, self.dt * every,
                           {**self.meta, "subsampled": every})


def lattice_series(samples, field_model, geom) -> FieldSeries:
    """Turn sampler output (raw sums per observable column) into a FieldSeries.

    The sampler must have been run with ``observables=field_model.weights_``.
    """
    xi = field_model.transform_sums(samples.observables)
    dt = samples.dt / geom.L**2
    return FieldSeries({name: xi[:, :, k] for k, name in enumerate(field_model.ids)}, dt,
                       {"source": "lattice", "seed": samples.seed, "N": geom.n_particles,
                        "mean_policy": field_model.mean_policy})
