import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhydro.classical import ClassicalModelSpec, unit_rate
from qhydro.lattice import build_lattice
from qhydro.quantum import (
    BOSON,
    FERMION,
    FockSpace,
    assemble_lindblad,
    bounded_boson_ops,
    build_basis,
    check_classical_restriction,
    check_gauge_covariance,
    classical_stationary,
    evolve,
    gauge_automorphism,
    gauge_average,
    gauge_unitary,
    heisenberg_generator,
    ladder_ops,
    lift_state,
    schrodinger_generator,
    stationary_state,
)


def sep_model(N=4, h=(0.7, 0.3)):
    spec = ClassicalModelSpec.sep_from_densities(*h)
    g = build_lattice(1, N)
    return spec, g, assemble_lindblad(spec, g)


def zrp_model():
    spec = ClassicalModelSpec.zrp((0.5, 0.2), unit_rate, 3)
    g = build_lattice(1, 3)
    return spec, g, assemble_lindblad(spec, g)


def test_bases():
    assert build_basis(FockSpace(FERMION, 2)).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert FockSpace(BOSON, 2, 2).dim == 9
    sp3 = FockSpace(FERMION, 3)
    n2 = ladder_ops(sp3)["n"][1].toarray()
    assert np.array_equal(np.diag(n2).real, sp3.basis[:, 1])


def test_boson_number_operator():
    sp1 = FockSpace(BOSON, 1, 5)
    ops = ladder_ops(sp1)
    N = (ops["adag"][0] @ ops["a"][0]).toarray()
    assert np.allclose(N, np.diag(np.arange(6)))


def test_fermion_hop_coefficient():
    sp2 = FockSpace(FERMION, 2)
    ops = ladder_ops(sp2)
    hop = (ops["adag"][0] @ ops["a"][1]).toarray()
    psi = np.zeros(4)
    psi[sp2.index_of((0, 1))] = 1.0
    out = hop @ psi
    assert abs(abs(out[sp2.index_of((1, 0))]) - 1.0) < 1e-15
    assert np.count_nonzero(np.abs(out) > 1e-15) == 1


def test_anticommutation_relations():
    sp3 = FockSpace(FERMION, 3)
    ops = ladder_ops(sp3)
    I = np.eye(8)
    for x in range(3):
        for y in range(3):
            a, ad = ops["a"][x].toarray(), ops["adag"][y].toarray()
            assert np.allclose(a @ ad + ad @ a, I * (x == y))
            b = ops["a"][y].toarray()
            assert np.allclose(a @ b + b @ a, 0.0)


def test_boson_commutator_below_cap():
    sp1 = FockSpace(BOSON, 1, 6)
    ops = ladder_ops(sp1)
    a, ad = ops["a"][0].toarray(), ops["adag"][0].toarray()
    comm = a @ ad - ad @ a
    assert np.allclose(comm[:-1, :-1], np.eye(6))


def test_bounded_ladder():
    sp1 = FockSpace(BOSON, 2, 3)
    al = bounded_boson_ops(sp1)
    alpha, alphad = al["alpha"][0].toarray(), al["alphadag"][0].toarray()
    for i, n in enumerate(sp1.basis):
        e = np.zeros(sp1.dim)
        e[i] = 1.0
        if n[0] == 0:
            assert np.allclose(alpha @ e, 0.0)
        if n[0] < 3:
            up = n.copy()
            up[0] += 1
            assert (alphad @ e)[sp1.index_of(up)] == 1.0
    assert abs(np.linalg.norm(alpha, 2) - 1.0) < 1e-12


def test_gauge_basics():
    sp2 = FockSpace(FERMION, 2)
    assert np.allclose(gauge_unitary(sp2, [0.0, 0.0]).toarray(), np.eye(4))
    ops = ladder_ops(sp2)
    th = np.array([0.4, -1.3])
    for x in range(2):
        a = ops["a"][x]
        assert np.allclose(gauge_automorphism(sp2, th, a).toarray(), np.exp(-1j * th[x]) * a.toarray())
        n = ops["n"][x]
        assert np.allclose(gauge_automorphism(sp2, th, n).toarray(), n.toarray())
    assert np.allclose(gauge_average(ops["a"][0]).toarray(), 0.0)
    assert np.allclose(gauge_average(ops["n"][0]).toarray(), ops["n"][0].toarray())
    assert np.allclose(gauge_average(ops["adag"][1] @ ops["a"][0]).toarray(), 0.0)


def test_jump_count_and_number_conservation():
    spec = ClassicalModelSpec.sep((0.5, 0.5))
    g = build_lattice(1, 3)
    L = assemble_lindblad(spec, g)
    tags = [t[0] for t in L.tags]
    assert tags.count("bulk") == 2 and tags.count("exit") + tags.count("entry") == 4
    # bulk jumps alone: the model with reservoirs switched off
    closed = assemble_lindblad(ClassicalModelSpec.sep((0.5, 0.5)), build_lattice(1, 4))
    bulk_only = type(closed)(closed.space, closed.H, [V for V, t in zip(closed.jumps, closed.tags)
                                                       if t[0] == "bulk"], [])
    Ntot = sum(closed.space.number(x) for x in range(3)).toarray()
    assert np.abs(heisenberg_generator(bulk_only, Ntot)).max() < 1e-14


def test_jumps_preserve_diagonality():
    _, _, L = zrp_model()
    rng = np.random.default_rng(1)
    rho = np.diag(rng.random(L.dim))
    for V in L.dense_jumps():
        out = V @ rho @ V.conj().T
        assert np.abs(out - np.diag(np.diag(out))).max() < 1e-15


def test_generator_identities():
    _, _, L = sep_model()
    assert np.abs(heisenberg_generator(L, np.eye(L.dim))).max() < 1e-14
    rng = np.random.default_rng(2)
    X = rng.normal(size=(L.dim, L.dim)) + 1j * rng.normal(size=(L.dim, L.dim))
    assert abs(np.trace(schrodinger_generator(L, X))) < 1e-12


def test_single_site_generator():
    g = build_lattice(1, 2)
    h = 0.6
    r = float(g.exit_multiplicity[0])
    L = assemble_lindblad(ClassicalModelSpec.sep((h, h)), g)
    n = L.space.number(0).toarray()
    expected = h * (np.eye(2) - n) - r * n
    assert np.allclose(heisenberg_generator(L, n), expected)
    st_ = stationary_state(L)
    assert np.allclose(st_.rho, np.diag([r, h]) / (h + r))
    assert st_.commutant_dimension == 1
    pi = classical_stationary(ClassicalModelSpec.sep((h, h)), g)
    assert np.allclose(lift_state(pi, L), st_.rho)


def test_restriction_and_control():
    for spec, g, L in (sep_model(), zrp_model()):
        assert check_classical_restriction(L, spec, g) < 1e-12
        assert check_classical_restriction(L.scaled_jump(0, 1.1), spec, g) > 1e-3


@given(st.lists(st.floats(-np.pi, np.pi), min_size=2, max_size=2))
@settings(max_examples=20, deadline=None)
def test_gauge_covariance_property(theta):
    _, _, L = sep_model(3)
    assert check_gauge_covariance(L, [theta]) < 1e-10


def test_gauge_covariance_controls():
    _, _, L = sep_model(3)
    assert check_gauge_covariance(L, [np.zeros(2)]) == 0.0
    a0 = L.space.annihilation(0)
    assert check_gauge_covariance(L.with_extra_jump(a0 + a0.conj().T), [[np.pi / 2, 0.0]]) > 0.5


def test_evolution():
    _, _, L = zrp_model()
    rng = np.random.default_rng(4)
    X = rng.normal(size=(L.dim, L.dim))
    rho0 = X @ X.T
    rho0 /= np.trace(rho0)
    assert np.array_equal(evolve(L, rho0, 0.0), rho0)
    two = evolve(L, evolve(L, rho0, 0.3), 0.5)
    assert np.abs(two - evolve(L, rho0, 0.8)).max() < 1e-8
    rho_inf = stationary_state(L).rho
    for t in (0.5, 5.0):
        assert np.abs(evolve(L, rho_inf, t) - rho_inf).max() < 1e-9


def test_stationary_state_is_diagonal_and_unique():
    for spec, g, L in (sep_model(3), zrp_model()):
        res = stationary_state(L)
        assert res.unique
        assert np.abs(res.rho - np.diag(np.diag(res.rho))).max() < 1e-10
        lift = lift_state(classical_stationary(spec, g), L)
        assert abs(np.trace(lift) - 1) < 1e-12
        assert np.linalg.eigvalsh(lift).min() >= 0


def test_lift_rejects_non_probability():
    with pytest.raises(ValueError):
        lift_state([0.7, 0.7])
