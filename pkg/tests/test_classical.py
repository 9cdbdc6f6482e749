import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhydro.classical import (
    SEP,
    ClassicalModelSpec,
    Event,
    apply_event,
    build_generator_matrix,
    enumerate_states,
    estimate_statistics,
    event_rates,
    marginals,
    product_vector,
    sample_ensemble,
    sep_mean_profile,
    sep_moment_oracle,
    simulate,
    stationary_distribution,
    total_variation,
    unit_rate,
    zrp_product_measure,
)
from qhydro.classical.stats import batch_estimate
from qhydro.lattice import build_lattice, discrete_laplacian


def single_site():
    # N = 2 in d = 1 gives one site with both neighbours outside: r = 2
    return build_lattice(1, 2)


def test_event_rates_sep():
    g = build_lattice(1, 4)
    spec = ClassicalModelSpec.sep((0.5, 0.5))
    ev = event_rates(np.array([1, 0, 1]), spec, g)
    bulk = sorted((e.x, e.y, e.rate) for e in ev if e.kind == "bulk")
    assert bulk == [(0, 1, 1.0), (2, 1, 1.0)]
    assert sorted((e.x, e.rate) for e in ev if e.kind == "exit") == [(0, 1.0), (2, 1.0)]
    assert not [e for e in ev if e.kind == "entry"]
    ev0 = event_rates(np.zeros(3, dtype=int), spec, g)
    assert all(e.kind == "entry" and e.rate == 0.5 for e in ev0)
    assert len(ev0) == 2


def test_event_rates_zrp():
    g = build_lattice(1, 4)
    spec = ClassicalModelSpec.zrp((0.3, 0.3), unit_rate, 5)
    ev = event_rates(np.array([2, 0, 1]), spec, g)
    assert sorted((e.x, e.y, e.rate) for e in ev if e.kind == "bulk") == [(0, 1, 1.0), (2, 1, 1.0)]
    assert sorted((e.x, e.rate) for e in ev if e.kind == "exit") == [(0, 1.0), (2, 1.0)]
    assert sorted((e.x, e.rate) for e in ev if e.kind == "entry") == [(0, 0.3), (2, 0.3)]


def test_apply_event():
    sep = ClassicalModelSpec.sep((0.5, 0.5))
    assert apply_event(np.array([1, 0]), Event("bulk", 0, 1, 1.0), sep).tolist() == [0, 1]
    assert apply_event(np.array([1, 1]), Event("bulk", 0, 1, 1.0), sep).tolist() == [1, 1]
    zrp = ClassicalModelSpec.zrp((0.5, 0.5), unit_rate, 3)
    assert apply_event(np.array([3, 0]), Event("entry", 0, -1, 0.5), zrp).tolist() == [3, 0]


def test_simulate_determinism_and_short_time():
    g = build_lattice(1, 6)
    spec = ClassicalModelSpec.sep((0.7, 0.2))
    c0 = np.array([1, 0, 1, 0, 1])
    a = simulate(c0, spec, g, 5.0, seed=11)
    b = simulate(c0, spec, g, 5.0, seed=11)
    assert a.events == b.events and np.array_equal(a.times, b.times)
    assert np.array_equal(a.replay(spec), a.final)
    tiny = simulate(c0, spec, g, 1e-12, seed=3)
    assert tiny.events == [] and np.array_equal(tiny.final, c0)


def test_two_state_chain_long_run_mean():
    g = single_site()
    h = 1.0
    spec = ClassicalModelSpec.sep((h, h))
    r = g.exit_multiplicity[0]
    tr = simulate(np.array([0]), spec, g, 4000.0, seed=5)
    assert abs(tr.occupation_time_average(spec)[0] - h / (h + r)) < 0.03


def test_generator_examples():
    g = single_site()
    h, r = 0.6, g.exit_multiplicity[0]
    Q = build_generator_matrix(ClassicalModelSpec.sep((h, h)), g).toarray()
    assert np.allclose(Q, [[-h, h], [r, -r]])
    pi = stationary_distribution(Q)
    assert abs(pi[1] - h / (h + r)) < 1e-12


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.integers(3, 6))
@settings(max_examples=20, deadline=None)
def test_generator_annihilates_constants(h0, h1, N):
    g = build_lattice(1, N)
    for spec in (ClassicalModelSpec.sep((h0, h1)), ClassicalModelSpec.zrp((h0, h1), unit_rate, 3)):
        Q = build_generator_matrix(spec, g)
        assert np.allclose(Q @ np.ones(Q.shape[0]), 0.0, atol=1e-12)


def test_generator_on_number_functions_is_laplacian():
    g = build_lattice(1, 4)
    spec = ClassicalModelSpec.sep((0.4, 0.9))
    Q = build_generator_matrix(spec, g).toarray()
    states = enumerate_states(3, 2)
    x = int(g.interior[0])
    lhs = Q @ states[:, x]
    rhs = np.array([discrete_laplacian(g, s.astype(float))[x] for s in states])
    assert np.allclose(lhs, rhs)


def test_equilibrium_sep_is_bernoulli_product():
    rho = 0.35
    spec = ClassicalModelSpec.sep_from_densities(rho, rho)
    g = build_lattice(1, 3)
    pi = stationary_distribution(build_generator_matrix(spec, g))
    states = enumerate_states(2, 2)
    bern = np.prod(np.where(states == 1, rho, 1 - rho), axis=1)
    assert np.abs(pi - bern).max() < 1e-12


def test_zrp_stationary_matches_product_measure():
    spec = ClassicalModelSpec.zrp((0.3, 0.1), unit_rate, 12)
    g = build_lattice(1, 4)
    pi = stationary_distribution(build_generator_matrix(spec, g))
    pm = zrp_product_measure(spec, g)
    assert total_variation(pi, product_vector(pm.marginals)) < 1e-8
    # geometric marginals (1 - z) z^n, up to the truncation mass
    n = np.arange(13)
    geo = (1 - pm.fugacity[:, None]) * pm.fugacity[:, None] ** n
    assert np.abs(pm.marginals - geo).max() < 1e-6


def test_zrp_constant_h_gives_constant_fugacity():
    g = build_lattice(1, 6)
    pm = zrp_product_measure(ClassicalModelSpec.zrp((0.4, 0.4), unit_rate, 30), g)
    assert np.allclose(pm.fugacity, 0.4)


def test_sep_oracle_against_brute_force():
    g = build_lattice(1, 5)
    spec = ClassicalModelSpec.sep_from_densities(0.8, 0.2)
    pi = stationary_distribution(build_generator_matrix(spec, g))
    states = enumerate_states(4, 2).astype(float)
    mean = pi @ states
    second = states.T @ (pi[:, None] * states)
    m = sep_moment_oracle(spec, g)
    assert np.abs(m.mean - mean).max() < 1e-12
    assert np.abs(m.covariance - (second - np.outer(mean, mean))).max() < 1e-12
    assert np.abs(sep_mean_profile(spec, g) - mean).max() < 1e-12


def test_sep_oracle_equilibrium_and_sign():
    eq = sep_moment_oracle(ClassicalModelSpec.sep_from_densities(0.3, 0.3), build_lattice(1, 10))
    assert np.allclose(eq.mean, 0.3)
    assert np.abs(eq.covariance - np.diag(np.diag(eq.covariance))).max() < 1e-13
    for N in (32, 64):
        g = build_lattice(1, N)
        spec = ClassicalModelSpec.sep_from_densities(0.8, 0.2)
        m = sep_moment_oracle(spec, g)
        assert np.all(np.diff(m.mean) < 0)
        assert np.abs(discrete_laplacian(g, m.mean)[g.interior]).max() < 1e-12
        off = m.covariance[~np.eye(g.n_sites, dtype=bool)]
        assert np.all(off < 0)
        assert np.abs(off).max() * N < 0.36


def test_batch_estimates():
    est = batch_estimate(np.full((4, 64), 2.5), 16)
    assert est.value == 2.5 and est.stderr == 0.0
    rng = np.random.default_rng(0)
    # doubling the number of trajectories divides the error by sqrt(2)
    a = batch_estimate(rng.normal(size=(8, 5000)), 256).stderr
    b = batch_estimate(rng.normal(size=(16, 5000)), 256).stderr
    assert abs(a / b / np.sqrt(2.0) - 1.0) < 0.2


def test_single_site_ensemble_mean():
    g = single_site()
    spec = ClassicalModelSpec.sep((1.0, 1.0))
    s = sample_ensemble(spec, g, np.array([0]), n_traj=4, n_samples=4000, dt=0.5, seed=2,
                        observables=np.eye(1))
    est = estimate_statistics(s.observables, burn_in=10)[0]
    assert abs(est.z(1.0 / 3.0)) < 3


def test_sampler_matches_exact_marginals():
    # uniformized sampler against the exact stationary law on a 4-site chain
    g = build_lattice(1, 5)
    spec = ClassicalModelSpec.sep_from_densities(0.9, 0.1)
    pi = stationary_distribution(build_generator_matrix(spec, g))
    exact = marginals(pi, 4, 2)[:, 1]
    s = sample_ensemble(spec, g, np.zeros(4, dtype=int), n_traj=8, n_samples=4000, dt=1.0, t_burn=20.0,
                        seed=9, observables=np.eye(4))
    for k in range(4):
        assert abs(batch_estimate(s.observables[:, :, k], 32).z(exact[k])) < 3.5


def test_invalid_specs():
    with pytest.raises(ValueError):
        ClassicalModelSpec.sep_from_densities(1.0, 0.2)
    with pytest.raises(ValueError):
        ClassicalModelSpec.zrp((0.3, 0.3), lambda k: 1.0, 3)  # g(0) must vanish
    with pytest.raises(ValueError):
        ClassicalModelSpec("tasep", (0.3, 0.3))
    assert SEP == "sep"
