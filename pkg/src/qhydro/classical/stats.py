"""Batch-means error bars and burn-in for stationary time series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_BATCHES = 8


class InsufficientBatches(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceEstimate:
    value: float
    stderr: float
    n_samples: int
    meta: dict = field(default_factory=dict, compare=False)

    def z(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.value == reference else np.inf * np.sign(self.value - reference)
        return (self.value - reference) / self.stderr

    def as_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "n_samples": self.n_samples, **self.meta}


def batch_means(samples, n_batches: int = 32) -> np.ndarray:
    """Means of contiguous batches for each trajectory, pooled.

    ``samples`` has shape (n_traj, n_time) or (n_time,).  Each trajectory is
    cut into ``max(1, n_batches // n_traj)`` batches of equal length; the
    trailing remainder is dropped.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    n_traj, n_time = x.shape
    per = max(1, n_batches // n_traj)
    size = n_time // per
    if size < 1:
        raise InsufficientBatches(f"series of length {n_time} cannot be cut into {per} batches")
    x = x[:, : per * size].reshape(n_traj, per, size)
    return x.mean(axis=2).ravel()


def batch_estimate(samples, n_batches: int = 32, **meta) -> CovarianceEstimate:
    """Mean of ``samples`` with a batch-means standard error."""
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    bm = batch_means(x, n_batches)
    if len(bm) < MIN_BATCHES:
        raise InsufficientBatches(f"only {len(bm)} batches; at least {MIN_BATCHES} required")
    se = float(bm.std(ddof=1) / np.sqrt(len(bm)))
    return CovarianceEstimate(
        value=float(bm.mean()),
        stderr=se,
        n_samples=int(x.size),
        meta={"n_batches": len(bm), "batch_size": x.shape[1] // max(1, n_batches // x.shape[0]), **meta},
    )


def autocorrelation(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    x = x - x.mean()
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    if acf[0] == 0:
        return np.zeros(n)
    return acf / acf[0]


def integrated_autocorr_time(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time in samples, Sokal's adaptive window."""
    rho = autocorrelation(x)
    if not np.any(rho):
        return 1.0
    taus = 2.0 * np.cumsum(rho) - 1.0
    m = np.arange(len(taus))
    ok = m < c * taus
    window = np.argmin(ok) if not ok.all() else len(taus) - 1
    return float(max(taus[window], 1.0))


def burn_in_samples(total_number, factor: float = 10.0) -> int:
    """Samples to discard: ``factor`` integrated autocorrelation times of the
    total particle number."""
    series = np.atleast_2d(np.asarray(total_number, dtype=float))
    tau = max(integrated_autocorr_time(s) for s in series)
    return int(np.ceil(factor * tau))


def estimate_statistics(samples, burn_in=None, observables=None, n_batches: int = 32,
                        total_number=None) -> dict:
    """Time-averaged means of observables with batch-means standard errors.

    ``samples`` has shape (n_traj, n_time, n_obs).  ``burn_in`` is a sample
    count; when None it is set to ten integrated autocorrelation times of
    ``total_number`` (shape (n_traj, n_time)).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if burn_in is None:
        if total_number is None:
            raise ValueError("burn_in policy needs the total particle number series")
        burn_in = burn_in_samples(total_number)
    x = x[:, burn_in:, :]
    names = observables if observables is not None else list(range(x.shape[2]))
    return {
        name: batch_estimate(x[:, :, k], n_batches, burn_in=int(burn_in))
        for k, name in enumerate(names)
    }
