"""Empirical density field, fluctuation field and covariance estimators."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..classical.model import SEP, ClassicalModelSpec
from ..classical.oracles import sep_mean_profile, zrp_product_measure
from ..classical.stats import CovarianceEstimate, batch_estimate
from ..lattice import LatticeGeometry

EXACT = "exact"
EMPIRICAL = "empirical"


class MeanPolicyError(ValueError):
    pass


def smear(c, f, geom: LatticeGeometry) -> float:
    """q^{(N)}(f) = L_N^{-d} Σ_y n_y f(y / L_N).  ``f`` is a TestFunction or an
    array of lattice samples."""
    fx = f.on_lattice(geom) if hasattr(f, "on_lattice") else np.asarray(f, dtype=float)
    c = np.asarray(c, dtype=float)
    return (c @ fx) / geom.L**geom.dimension


def exact_mean_occupation(spec: ClassicalModelSpec, geom: LatticeGeometry) -> np.ndarray:
    if spec.variant == SEP:
        return sep_mean_profile(spec, geom)
    return zrp_product_measure(spec, geom).mean


class FluctuationField(TransformerMixin, BaseEstimator):
    """Maps configurations to ξ(f) = N^{1/2} [q^{(N)}(f) - ω(q^{(N)}(f))].

    ``mean_policy="exact"`` centres with the stationary oracle for ``spec``;
    ``"empirical"`` learns the mean occupation in :meth:`fit` from an
    independent set of configurations and refuses to fit without one.
    """

    def __init__(self, test_functions=(), geometry=None, spec=None, mean_policy=EXACT):
        self.test_functions = test_functions
        self.geometry = geometry
        self.spec = spec
        self.mean_policy = mean_policy

    def fit(self, X=None, y=None):
        geom = self.geometry
        if geom is None:
            raise ValueError("a lattice geometry is required")
        self.weights_ = np.column_stack(
            [f.on_lattice(geom) for f in self.test_functions]
        ) if len(self.test_functions) else np.zeros((geom.n_sites, 0))
        if self.mean_policy == EXACT:
            if self.spec is None:
                raise MeanPolicyError("exact mean policy needs the model spec")
            self.mean_occupation_ = exact_mean_occupation(self.spec, geom)
        elif self.mean_policy == EMPIRICAL:
            if X is None:
                raise MeanPolicyError("empirical mean policy needs an independent ensemble; "
                                      "centring on the analysed data would bias covariances")
            X = np.asarray(X, dtype=float)
            self.mean_occupation_ = X.reshape(-1, geom.n_sites).mean(axis=0)
        else:
            raise ValueError(f"unknown mean policy {self.mean_policy!r}")
        self.scale_ = np.sqrt(geom.n_particles) / geom.L**geom.dimension
        self.mean_sums_ = self.mean_occupation_ @ self.weights_
        return self

    def transform(self, X):
        """Configurations (..., M) to ξ values (..., K)."""
        check_is_fitted(self, "weights_")
        X = np.asarray(X, dtype=float)
        return self.transform_sums(X @ self.weights_)

    def transform_sums(self, S):
        """Raw sums Σ_y n_y f(y / L) (..., K), as recorded by the sampler, to ξ."""
        check_is_fitted(self, "weights_")
        return self.scale_ * (np.asarray(S, dtype=float) - self.mean_sums_)

    @property
    def ids(self) -> list[str]:
        return [f.id for f in self.test_functions]


def static_covariance(xi_f, xi_g, n_batches: int = 32, burn_in: int = 0) -> CovarianceEstimate:
    """Batch-means estimate of E ξ(f) ξ(g) from stationary series (n_traj, n_time)."""
    a = np.atleast_2d(xi_f)[:, burn_in:]
    b = np.atleast_2d(xi_g)[:, burn_in:]
    return batch_estimate(a * b, n_batches, lag=0)


def dynamic_covariance(xi_f, xi_g, lag: int, n_batches: int = 32, burn_in: int = 0) -> CovarianceEstimate:
    """E ξ_{s+lag}(f) ξ_s(g) from time-shifted products; ``lag`` in samples."""
    a = np.atleast_2d(xi_f)[:, burn_in:]
    b = np.atleast_2d(xi_g)[:, burn_in:]
    n = a.shape[1]
    if lag < 0 or lag >= n:
        raise ValueError(f"lag {lag} outside the trajectory span of {n} samples")
    prod = a[:, lag:] * b[:, : n - lag] if lag else a * b
    est = batch_estimate(prod, n_batches, lag=int(lag))
    est.meta["usable_fraction"] = (n - lag) / n
    return est


def lagged_difference(xi_f, xi_h, xi_g, lag: int, n_batches: int = 32, burn_in: int = 0) -> CovarianceEstimate:
    """Paired estimate of E[ξ_{s+lag}(f) ξ_s(g)] - E[ξ_s(h) ξ_s(g)] sharing samples,
    so common fluctuations cancel in the standard error."""
    a = np.atleast_2d(xi_f)[:, burn_in:]
    c = np.atleast_2d(xi_h)[:, burn_in:]
    b = np.atleast_2d(xi_g)[:, burn_in:]
    n = a.shape[1]
    if lag < 0 or lag >= n:
        raise ValueError(f"lag {lag} outside the trajectory span of {n} samples")
    diff = a[:, lag:] * b[:, : n - lag] - c[:, : n - lag] * b[:, : n - lag]
    return batch_estimate(diff, n_batches, lag=int(lag))
