"""Statistical batteries for regression, chaoticity and local equilibrium.

Every test works on a FieldSeries, so the same code runs on lattice ensembles
and on OU paths whose law is known exactly.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from ..classical.stats import batch_estimate
from .field import lagged_difference, static_covariance, dynamic_covariance
from .series import FieldSeries
from .testfunctions import inner

Z_THRESHOLD = 3.0


@dataclass
class HypothesisRow:
    hypothesis: str
    statistic: str
    value: float
    stderr: float
    reference: float
    z: float
    verdict: bool
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("meta"))
        return d


def _row(hypothesis, statistic, est, reference, threshold=Z_THRESHOLD, **meta) -> HypothesisRow:
    z = float(est.z(reference))
    return HypothesisRow(hypothesis, statistic, est.value, est.stderr, float(reference), z,
                         bool(abs(z) < threshold), {**est.meta, **meta})


def write_report(rows, path) -> None:
    with open(path, "w") as fh:
        json.dump([r.as_dict() for r in rows], fh, indent=2, default=float)


# regression -----------------------------------------------------------------

def adjoint_name(f_id: str, tau: float, tag: str = "") -> str:
    return f"T*{tag}[{tau:g}]{f_id}"


def regression_test(series: FieldSeries, pairs, lags, tag: str = "", n_batches: int = 32,
                    burn_in: int = 0) -> list[HypothesisRow]:
    """E ξ_{s+τ}(f) ξ_s(g) against E ξ_s(T_τ* f) ξ_s(g) for every (f, g, τ).

    ``series`` must contain the observables named by :func:`adjoint_name`.
    The two sides share samples; the z-score is that of their paired difference.
    """
    rows = []
    for f_id, g_id in pairs:
        for tau in lags:
            k = series.lag_samples(tau)
            t_name = adjoint_name(f_id, tau, tag)
            diff = lagged_difference(series[f_id], series[t_name], series[g_id], k, n_batches, burn_in)
            dyn = dynamic_covariance(series[f_id], series[g_id], k, n_batches, burn_in)
            sta = static_covariance(series[t_name], series[g_id], n_batches, burn_in)
            rows.append(_row("regression", f"{f_id}|{g_id}|{tau:g}{tag}", diff, 0.0,
                             dynamic=dyn.value, dynamic_stderr=dyn.stderr, static_propagated=sta.value,
                             static_stderr=sta.stderr, lag=tau))
    return rows


# chaoticity -----------------------------------------------------------------

def lstar_name(f_id: str) -> str:
    return f"L*{f_id}"


def w_increments(xi, lxi, dt: float, window: int, stride: int) -> np.ndarray:
    """w over windows [j stride, j stride + window] (in samples), trapezoid rule.

    Returns shape (n_traj, n_windows)."""
    xi = np.atleast_2d(xi)
    lxi = np.atleast_2d(lxi)
    n = xi.shape[1]
    starts = np.arange(0, n - window, stride)
    cum = integrate.cumulative_trapezoid(lxi, dx=dt, axis=1, initial=0.0)
    ends = starts + window
    return xi[:, ends] - xi[:, starts] - (cum[:, ends] - cum[:, starts])


def chaoticity_test(series: FieldSeries, f_id: str, g_id: str, disjoint_id: str, window_time: float,
                    s_fg: float, s_ff: float, density_scale: float = 1.0,
                    n_batches: int = 32) -> list[HypothesisRow]:
    """Covariances of w increments.

    (a) w(f) on one window against w(g) on a window two lengths later: 0;
    (b) w(f) against w(h) on the same window with disjoint supports: 0;
    (c) w(f) against w(g) on half-overlapping windows: 2∫χΦ' f'g' × overlap.
    ``s_fg`` and ``s_ff`` are the integrals 2∫χΦ' f'g' and 2∫χΦ' f'^2.
    Each statistic is recomputed at twice the quadrature step; a move larger
    than half a standard error is flagged.
    """
    m = series.lag_samples(window_time)
    if m < 2 or m % 2:
        raise ValueError("window must span an even number of samples, at least 2")

    def compute(ser: FieldSeries, m):
        wf = w_increments(ser[f_id], ser[lstar_name(f_id)], ser.dt, m, m // 2)
        wg = w_increments(ser[g_id], ser[lstar_name(g_id)], ser.dt, m, m // 2)
        wh = w_increments(ser[disjoint_id], ser[lstar_name(disjoint_id)], ser.dt, m, m // 2)
        a = batch_estimate(wf[:, :-4] * wg[:, 4:], n_batches)
        b = batch_estimate(wf * wh, n_batches)
        c = batch_estimate(wf[:, :-1] * wg[:, 1:], n_batches)
        d = batch_estimate(wf * wf, n_batches)
        return a, b, c, d

    fine = compute(series, m)
    coarse = compute(series.subsample(2), m // 2) if m % 4 == 0 else None
    refs = (0.0, 0.0, density_scale * s_fg * window_time / 2, density_scale * s_ff * window_time)
    labels = ("disjoint-windows", "disjoint-supports", "half-overlap", "same-window")
    rows = []
    for i, (est, ref, lab) in enumerate(zip(fine, refs, labels)):
        meta = {"window": window_time, "quadrature_step": series.dt}
        if coarse is not None:
            moved = abs(coarse[i].value - est.value)
            meta["coarse_value"] = coarse[i].value
            meta["quadrature_flag"] = bool(moved > 0.5 * est.stderr)
        rows.append(_row("chaoticity", lab, est, ref, **meta))
    return rows


# local equilibrium ------------------------------------------------------------

def check_resolution(width: float, eps: float, L: float, min_sites: float = 4.0) -> None:
    """The rescaled support must cover at least ``min_sites`` lattice spacings per side."""
    if width * eps * L < min_sites:
        raise ValueError(f"eps={eps} unresolved: half-width {width * eps * L:.2f} sites < {min_sites}; "
                         f"need eps >= {min_sites / (width * L):.4g}")


def local_equilibrium_test(series: FieldSeries, names, chi0: float, dphi0: float, f, g,
                           eps_list, n_batches: int = 32, density_scale: float = 1.0) -> list[HypothesisRow]:
    """Static statistics of rescaled test functions against equilibrium limits.

    ``names[eps]`` = (name of ξ(f_eps), name of ξ(g_eps), name of ξ(L* f_eps)).
    The first statistic tends to χ ∫ f g; the second, ε^2 E ξ(L* f_eps) ξ(g_eps),
    to χ Φ' ∫ f'' g = -χ Φ' ∫ f' g'.
    """
    lim1 = density_scale * chi0 * inner(f, g)
    lim2 = -density_scale * chi0 * dphi0 * inner(f, g, derivative=1)
    rows = []
    for eps in eps_list:
        fn, gn, ln = names[eps]
        est1 = static_covariance(series[fn], series[gn], n_batches)
        rows.append(_row("local-equilibrium", f"smeared[{eps:g}]", est1, lim1, eps=eps))
        prod = eps**2 * np.atleast_2d(series[ln]) * np.atleast_2d(series[gn])
        est2 = batch_estimate(prod, n_batches)
        rows.append(_row("local-equilibrium", f"gradient[{eps:g}]", est2, lim2, eps=eps))
    return rows


def monotone_within_errors(rows, k: float = 2.0) -> bool:
    """|value - reference| does not increase along the rows beyond k combined errors."""
    dev = [abs(r.value - r.reference) for r in rows]
    se = [r.stderr for r in rows]
    return all(dev[i + 1] <= dev[i] + k * np.hypot(se[i], se[i + 1]) for i in range(len(rows) - 1))
