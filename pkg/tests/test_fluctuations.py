import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from qhydro.classical import ClassicalModelSpec, product_initial, sample_ensemble, sep_moment_oracle, unit_rate
from qhydro.fluctuations import (
    FieldSeries,
    FluctuationField,
    MeanPolicyError,
    SampledFunction,
    adjoint_name,
    bump,
    catalogue,
    chaoticity_test,
    dynamic_covariance,
    green,
    greens_pairing,
    inner,
    lattice_series,
    local_equilibrium_test,
    lstar_name,
    lyapunov_covariance,
    normalized_bump,
    ou_simulate,
    ou_spec,
    predicted_static_covariance,
    regression_test,
    sine,
    smear,
    static_covariance,
)
from qhydro.fluctuations.hypotheses import check_resolution, monotone_within_errors, w_increments
from qhydro.fluctuations.testfunctions import BUMP_MASS, TestFunction
from qhydro.hydro import MacroGrid, semigroup_apply, sep_flux_function, zrp_flux_function
from qhydro.lattice import build_lattice

SEP = sep_flux_function()


# test functions ------------------------------------------------------------

def test_bump_derivatives_match_finite_differences():
    f = bump(0.4, 0.25)
    x = np.linspace(0.2, 0.6, 41)[1:-1]
    e = 1e-5
    assert np.allclose(f.d1(x), (f(x + e) - f(x - e)) / (2 * e), atol=1e-6)
    assert np.allclose(f.d2(x), (f.d1(x + e) - f.d1(x - e)) / (2 * e), atol=1e-4)


def test_bump_support_and_catalogue():
    f = bump(0.5, 0.2)
    assert f(np.array([0.29, 0.71])).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        bump(0.1, 0.2)
    cat = catalogue()
    assert len(cat) == 15 and len(set(cat)) == 15
    g = normalized_bump(0.5, 0.2)
    x = np.linspace(0, 1, 200001)
    assert abs(np.trapezoid(g(x), x) - 1.0) < 1e-6
    assert abs(BUMP_MASS - 0.443993816168) < 1e-9


def test_rescaling():
    base = TestFunction("base", "bump", center=0.0, width=1.0)
    fe = base.rescaled(0.5, 0.1)
    assert fe.support == pytest.approx((0.4, 0.6))
    # ∫ f_eps^2 does not depend on eps
    assert inner(fe, fe) == pytest.approx(inner(base, base), rel=1e-8)
    with pytest.raises(ValueError):
        check_resolution(1.0, 0.01, 100)


# empirical field ---------------------------------------------------------------

def test_smear_examples():
    g = build_lattice(1, 50)
    f = bump(0.5, 0.3)
    assert smear(np.zeros(49), f, g) == 0.0
    full = smear(np.ones(49), f, g)
    x = np.linspace(0, 1, 100001)
    assert abs(full - np.trapezoid(f(x), x)) < 1e-3
    c = np.zeros(49)
    c[24] = 1
    assert smear(c, f, g) == pytest.approx(f(np.array([25 / 50]))[0] / 50)


def test_field_centring_and_estimator_api():
    g = build_lattice(1, 20)
    spec = ClassicalModelSpec.sep_from_densities(0.7, 0.3)
    fns = [bump(0.5, 0.3), sine(1)]
    fld = FluctuationField(fns, g, spec).fit()
    mean = fld.mean_occupation_
    assert np.allclose(fld.transform(mean[None, :]), 0.0)
    assert fld.ids == ["bump-0.5-0.3", "sine-1"]
    params = fld.get_params()
    assert params["mean_policy"] == "exact"
    cl = clone(fld)
    assert not hasattr(cl, "weights_")
    with pytest.raises(MeanPolicyError):
        FluctuationField(fns, g, spec, mean_policy="empirical").fit()
    emp = FluctuationField(fns, g, mean_policy="empirical").fit(np.tile(mean, (5, 1)))
    assert np.allclose(emp.mean_occupation_, mean)


def test_field_variance_identity():
    # ξ variance equals N Var(q^N(f)) by construction
    g = build_lattice(1, 10)
    spec = ClassicalModelSpec.sep_from_densities(0.6, 0.6)
    f = bump(0.5, 0.4)
    rng = np.random.default_rng(0)
    X = (rng.random((2000, 9)) < 0.6).astype(float)
    xi = FluctuationField([f], g, spec).fit().transform(X)[:, 0]
    q = np.array([smear(c, f, g) for c in X])
    assert np.var(xi) == pytest.approx(10 * np.var(q), rel=1e-10)


def test_equilibrium_static_covariances():
    rho = 0.3
    spec = ClassicalModelSpec.sep_from_densities(rho, rho)
    g = build_lattice(1, 40)
    f, k = bump(0.25, 0.15), bump(0.75, 0.15)
    fld = FluctuationField([f, k], g, spec).fit()
    s = sample_ensemble(spec, g, product_initial(np.full(39, rho), spec), n_traj=4, n_samples=6000,
                        dt=0.02 * 1600, seed=3, observables=fld.weights_)
    ser = lattice_series(s, fld, g)
    ff = static_covariance(ser[f.id], ser[f.id], 32)
    assert abs(ff.z(rho * (1 - rho) * inner(f, f))) < 3.5
    fk = static_covariance(ser[f.id], ser[k.id], 32)
    assert abs(fk.z(0.0)) < 3.5
    zero_lag = dynamic_covariance(ser[f.id], ser[f.id], 0, 32)
    assert zero_lag.value == ff.value


# prediction --------------------------------------------------------------------

def test_green_function_inverts_laplacian():
    grid = MacroGrid(99)
    x = grid.interior
    G = green(x[:, None], x[None, :])
    lap = grid.dirichlet_laplacian().toarray()
    assert np.abs(lap @ G + np.eye(len(x)) / grid.dx).max() < 1e-9


def test_green_pairing_against_quadrature():
    f, g = bump(0.3, 0.2), bump(0.7, 0.2)
    x = np.linspace(0, 1, 1201)
    w = np.gradient(x)
    direct = (f(x) * w) @ green(x[:, None], x[None, :]) @ (g(x) * w)
    assert greens_pairing(f, g) == pytest.approx(direct, rel=1e-4)


def test_prediction_branches():
    f = bump(0.5, 0.3)
    eq = predicted_static_covariance(f, f, (0.4, 0.4), SEP)
    assert eq.long_range == 0.0 and eq.total == pytest.approx(0.24 * inner(f, f), rel=1e-8)
    ne = predicted_static_covariance(f, f, (0.8, 0.2), SEP)
    assert ne.method == "green" and ne.long_range < 0
    assert ne.long_range == pytest.approx(-0.36 * greens_pairing(f, f), rel=1e-10)
    z = predicted_static_covariance(f, f, (0.5, 0.1), zrp_flux_function(unit_rate))
    assert z.method == "none" and z.long_range == 0.0


def test_prediction_against_exact_oracle():
    spec = ClassicalModelSpec.sep_from_densities(0.8, 0.2)
    f, g = bump(0.3, 0.2), bump(0.75, 0.2)
    vals = []
    for N in (32, 64):
        geom = build_lattice(1, N)
        C = sep_moment_oracle(spec, geom).covariance
        off = C - np.diag(np.diag(C))
        vals.append(N / N**2 * f.on_lattice(geom) @ off @ g.on_lattice(geom))
    extrap = 2 * vals[1] - vals[0]
    pred = predicted_static_covariance(f, g, (0.8, 0.2), SEP)
    assert abs(extrap - pred.long_range) < 0.02 * abs(pred.long_range)


def test_long_range_vanishes_under_rescaling():
    base = TestFunction("base", "bump", center=0.0, width=1.0)
    lr = [predicted_static_covariance(base.rescaled(0.5, e), base.rescaled(0.5, e), (0.8, 0.2), SEP).long_range
          for e in (0.4, 0.2, 0.1)]
    # LR = eps c + O(eps^2), with c = -(Δρ)^2 G(x0, x0) (∫ phi)^2
    c = -0.36 * 0.25 * BUMP_MASS**2
    slope = np.array(lr) / np.array([0.4, 0.2, 0.1])
    assert np.all(np.diff(np.abs(slope)) > 0)
    assert 2 * slope[2] - slope[1] == pytest.approx(c, rel=0.01)


# OU reference process ---------------------------------------------------------

def test_ou_zero_noise_matches_semigroup():
    spec = ou_spec((0.8, 0.2), SEP, 31)
    x = spec.grid.interior
    u0 = np.sin(np.pi * x) + 0.5 * np.sin(2 * np.pi * x)
    paths = ou_simulate(spec, 0.05, 1, 0, x0=u0, noise=False, sample_dt=0.05, dt=1e-5)
    ref = semigroup_apply(spec.L, 0.05, u0)
    assert np.abs(paths.final[0] - ref).max() < 1e-3


def test_lyapunov_matches_prediction():
    spec = ou_spec((0.8, 0.2), SEP, 96)
    C = lyapunov_covariance(spec)
    for f, g in [(bump(0.5, 0.3), bump(0.5, 0.3)), (bump(0.3, 0.2), bump(0.75, 0.2))]:
        pred = predicted_static_covariance(f, g, (0.8, 0.2), SEP).total
        assert spec.pair(f, g, C) == pytest.approx(pred, rel=0.02)


def test_ou_hypothesis_batteries():
    """Regression and chaoticity on OU paths, whose law is known exactly."""
    spec = ou_spec((0.8, 0.2), SEP, 24)
    x = spec.grid.interior
    f, g = bump(0.4, 0.25), bump(0.6, 0.25)
    obs = {f.id: f(x), g.id: g(x)}
    lap = spec.L.matrix
    for fn in (f, g):
        obs[lstar_name(fn.id)] = lap.T @ fn(x)
        for tau in (0.02, 0.05):
            obs[adjoint_name(fn.id, tau)] = semigroup_apply(spec.L, tau, fn(x), adjoint=True)
    paths = ou_simulate(spec, 40.0, 8, 5, observables=obs, sample_dt=0.002, t_burn=0.5)
    rows = regression_test(paths.series, [(f.id, g.id), (f.id, f.id)], (0.02, 0.05), n_batches=32)
    assert sum(r.verdict for r in rows) >= 3
    w = lambda y: SEP.chi(0.8 - 0.6 * y) * 1.0
    s_fg = 2 * inner(f, g, weight=w, derivative=1)
    s_ff = 2 * inner(f, f, weight=w, derivative=1)
    ch = chaoticity_test(paths.series, f.id, g.id, g.id, 0.02, s_fg, s_ff, n_batches=32)
    half = [r for r in ch if r.statistic == "half-overlap"][0]
    assert abs(half.z) < 3.5


def test_w_increments_exact_for_linear_drift():
    # ξ_t = a t with L* ξ ≡ a gives w ≡ 0
    t = np.arange(0, 101) * 0.01
    xi = 3.0 * t[None, :]
    lxi = np.full_like(xi, 3.0)
    assert np.allclose(w_increments(xi, lxi, 0.01, 10, 5), 0.0)


def test_local_equilibrium_battery_on_synthetic_series():
    rng = np.random.default_rng(1)
    base = TestFunction("base", "bump", center=0.0, width=1.0)
    chi, dphi = 0.25, 1.0
    lim1 = chi * inner(base, base)
    lim2 = -chi * dphi * inner(base, base, derivative=1)
    xi, names = {}, {}
    for eps in (0.4, 0.2):
        a = rng.normal(size=(4, 4000)) * np.sqrt(lim1)
        xi[f"f{eps}"] = a
        xi[f"l{eps}"] = a * lim2 / lim1 / eps**2
        names[eps] = (f"f{eps}", f"f{eps}", f"l{eps}")
    rows = local_equilibrium_test(FieldSeries(xi, 0.01), names, chi, dphi, base, base, (0.4, 0.2))
    assert all(r.verdict for r in rows)
    assert monotone_within_errors([r for r in rows if r.statistic.startswith("smeared")])


@given(st.integers(1, 5))
@settings(max_examples=5, deadline=None)
def test_series_lags(k):
    ser = FieldSeries({"a": np.zeros((1, 100))}, 0.01)
    assert ser.lag_samples(0.01 * k) == k
    with pytest.raises(ValueError):
        ser.lag_samples(0.0155)


def test_sampled_function_length_guard():
    with pytest.raises(ValueError):
        SampledFunction("s", np.zeros(3)).on_lattice(build_lattice(1, 10))
