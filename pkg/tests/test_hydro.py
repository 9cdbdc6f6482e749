import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhydro.classical import ClassicalModelSpec, unit_rate, zrp_fugacity
from qhydro.hydro import (
    HydroError,
    MacroGrid,
    linearized_operator,
    semigroup_apply,
    sep_flux_function,
    solve_pde,
    stationary_profile,
    zrp_flux_function,
)
from qhydro.lattice import build_lattice

SEP = sep_flux_function()
ZRP = zrp_flux_function(unit_rate, 200)


def test_ramp_is_stationary():
    grid = MacroGrid(49)
    ramp = lambda x: 0.8 - 0.6 * x
    out = solve_pde(ramp, (0.8, 0.2), SEP, 0.3, grid)
    assert np.abs(out.values - ramp(grid.nodes)).max() < 1e-12


def test_equilibrium_relaxation():
    grid = MacroGrid(39)
    out = solve_pde(lambda x: 0.3 + 0.4 * np.sin(np.pi * x) ** 2, (0.3, 0.3), SEP, 3.0, grid)
    assert np.abs(out.values - 0.3).max() < 1e-6


def test_convergence_to_ramp():
    grid = MacroGrid(99)
    out = solve_pde(lambda x: np.full_like(x, 0.5), (0.8, 0.2), SEP, 2.0, grid)
    assert np.abs(out.values - (0.8 - 0.6 * grid.nodes)).max() < 1e-6


def test_mass_ledger_balances():
    out = solve_pde(lambda x: 0.5 + 0.2 * np.sin(3 * x), (0.8, 0.2), SEP, 0.05, MacroGrid(31))
    assert max(abs(e["imbalance"]) for e in out.ledger) < 1e-12


def test_explicit_and_implicit_agree():
    grid = MacroGrid(31)
    q0 = lambda x: 0.8 - 0.6 * x + 0.15 * np.sin(np.pi * x) + 0.05 * np.sin(4 * np.pi * x)
    a = solve_pde(q0, (0.8, 0.2), SEP, 0.05, grid, method="explicit")
    b = solve_pde(q0, (0.8, 0.2), SEP, 0.05, grid, dt=0.05 * grid.dx**2)
    # forward Euler at the CFL step carries an O(dx^2) time error
    assert np.abs(a.values - b.values).max() < 5e-4
    z = solve_pde(lambda x: 0.5 + 0.3 * np.sin(np.pi * x), (0.5, 0.1), ZRP, 0.05, grid, method="explicit")
    assert np.all(np.isfinite(z.values))


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=15, deadline=None)
def test_maximum_principle(h0, h1, c):
    out = solve_pde(lambda x: np.full_like(x, c), (h0, h1), SEP, 0.05, MacroGrid(19))
    lo, hi = min(h0, h1, c), max(h0, h1, c)
    assert out.values.min() >= lo - 1e-12 and out.values.max() <= hi + 1e-12


def test_stationary_profiles():
    grid = MacroGrid(63)
    sep = stationary_profile((0.8, 0.2), SEP, grid)
    assert np.abs(sep.values - (0.8 - 0.6 * grid.nodes)).max() < 1e-14
    const = stationary_profile((0.3, 0.3), ZRP, grid)
    assert np.abs(const.values - 0.3 / 0.7).max() < 1e-10
    zrp = stationary_profile((0.5, 0.1), ZRP, grid)
    z = 0.5 - 0.4 * grid.nodes
    assert np.abs(zrp.values - z / (1 - z)).max() < 1e-9


def test_zrp_profile_against_lattice_fugacity():
    N = 200
    geom = build_lattice(1, N)
    spec = ClassicalModelSpec.zrp((0.5, 0.1), unit_rate, 50)
    z = zrp_fugacity(spec, geom)
    grid = MacroGrid.matching_lattice(N)
    q = stationary_profile((0.5, 0.1), ZRP, grid).interior
    assert np.abs(ZRP.phi(q) - z).max() < 5.0 / N


def test_zrp_flux_closed_forms():
    q = np.linspace(0.01, 5.0, 60)
    assert np.abs(ZRP.phi(q) - q / (1 + q)).max() < 1e-10
    assert np.abs(ZRP.chi(q) - q * (1 + q)).max() / 30 < 1e-10
    assert np.all(ZRP.dphi(q) > 0)
    small = np.array([1e-4])
    assert abs(ZRP.phi(small)[0] / small[0] - 1) < 1e-3 and abs(ZRP.chi(small)[0] / small[0] - 1) < 1e-3


@given(st.floats(0.01, 0.9))
@settings(max_examples=30, deadline=None)
def test_flux_inversion_roundtrip(z):
    q = ZRP.invert(np.array([z]))
    assert abs(ZRP.phi(q)[0] - z) < 1e-10


def test_flux_rejects_out_of_range():
    with pytest.raises(HydroError):
        SEP.invert(np.array([1.2]))


def test_linearized_operator():
    grid = MacroGrid(64)
    L = linearized_operator(stationary_profile((0.8, 0.2), SEP, grid), SEP)
    lap = grid.dirichlet_laplacian().toarray()
    assert np.array_equal(L.matrix, lap)
    assert np.all(L.spectrum().real < 0)
    L2 = linearized_operator(stationary_profile((0.8, 0.2), SEP, grid), SEP, dphi_scale=3.0)
    assert np.allclose(L2.matrix, 3.0 * lap)
    Lz = linearized_operator(stationary_profile((0.5, 0.1), ZRP, grid), ZRP)
    assert np.all(Lz.spectrum().real < 0)


def test_semigroup():
    grid = MacroGrid(63)
    L = linearized_operator(stationary_profile((0.8, 0.2), SEP, grid), SEP)
    v = np.sin(np.pi * grid.interior)
    assert np.allclose(semigroup_apply(L, 0.0, v), v)
    two = semigroup_apply(L, 0.07, semigroup_apply(L, 0.05, v))
    assert np.abs(two - semigroup_apply(L, 0.12, v)).max() < 1e-10
    err = np.abs(semigroup_apply(L, 0.1, v) - np.exp(-np.pi**2 * 0.1) * v).max()
    assert err < np.pi**4 * 0.1 * grid.dx**2


def test_grid_guards():
    with pytest.raises(ValueError):
        MacroGrid(0)
    assert issubclass(HydroError, RuntimeError)
