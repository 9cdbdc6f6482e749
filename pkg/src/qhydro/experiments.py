"""Experiment catalogue shared by the command line and the acceptance tests.

Each experiment takes a RunConfig (merged with its defaults) and returns an
ExperimentResult: gating checks, informational checks and CSV artifacts.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .classical import (
    SEP,
    ZRP,
    ClassicalModelSpec,
    build_generator_matrix,
    enumerate_states,
    marginals,
    product_initial,
    product_vector,
    sample_ensemble,
    sep_mean_profile,
    sep_moment_oracle,
    stationary_distribution,
    total_variation,
    unit_rate,
    zrp_product_measure,
)
from .classical.stats import batch_estimate, burn_in_samples
from .config import ConfigError, RunConfig
from .fluctuations import (
    FieldSeries,
    FluctuationField,
    SampledFunction,
    TestFunction,
    adjoint_name,
    bump,
    catalogue,
    chaoticity_test,
    check_resolution,
    exact_mean_occupation,
    inner,
    local_equilibrium_test,
    lattice_series,
    lstar_name,
    lyapunov_covariance,
    monotone_within_errors,
    normalized_bump,
    ou_simulate,
    ou_spec,
    predicted_static_covariance,
    regression_test,
    sine,
    static_covariance,
    stationary_density,
)
from .fluctuations.prediction import long_range_kernel
from .fluctuations.testfunctions import BUMP
from .hydro import (
    MacroGrid,
    linearized_operator,
    semigroup_apply,
    sep_flux_function,
    solve_pde,
    stationary_profile,
    zrp_flux_function,
)
from .lattice import build_lattice, laplacian_matrix
from .quantum import (
    assemble_lindblad,
    check_classical_restriction,
    check_density_matrix,
    check_gauge_covariance,
    classical_stationary,
    diagonal_leak,
    evolve,
    heisenberg_generator,
    lift_state,
    schrodinger_generator,
    stationary_state,
)
from .quantum.fock import gauge_automorphism


@dataclass
class Check:
    name: str
    value: float
    passed: bool
    reference: float | None = None
    stderr: float | None = None
    z: float | None = None
    gating: bool = True
    note: str = ""

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class ExperimentResult:
    checks: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)  # name -> (header, rows)
    summary: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def add(self, *args, **kw) -> Check:
        c = Check(*args, **kw)
        self.checks.append(c)
        return c


@dataclass(frozen=True)
class Experiment:
    id: str
    anchor: str
    description: str
    defaults: dict
    runner: Callable
    monte_carlo: bool = False


# shared builders ----------------------------------------------------------------

def g_function(cfg: RunConfig):
    spec = cfg.get("g", "unit")
    if spec == "unit":
        return unit_rate
    try:
        table = [float(p) for p in spec.split(",")]
    except ValueError:
        raise ConfigError("g", f"expected 'unit' or a comma-separated table, got {spec!r}") from None
    n_max = cfg.get("n_max", len(table))
    if len(table) < n_max:
        raise ConfigError("g", f"table gives {len(table)} values, n_max = {n_max} needs g(1)..g({n_max})")
    return lambda k: 0.0 if k == 0 else table[k - 1]


def model_spec(cfg: RunConfig, variant: str | None = None) -> ClassicalModelSpec:
    """Exclusion h values are reservoir densities; zero-range h values are entry rates."""
    variant = variant or cfg["variant"]
    h0, h1 = cfg["h"]
    try:
        if variant == SEP:
            return ClassicalModelSpec.sep_from_densities(h0, h1)
        return ClassicalModelSpec.zrp((h0, h1), g_function(cfg), cfg.get("n_max", 6))
    except ValueError as exc:
        raise ConfigError("h", str(exc)) from None


def flux_for(cfg: RunConfig, variant: str | None = None):
    variant = variant or cfg["variant"]
    return sep_flux_function() if variant == SEP else zrp_flux_function(g_function(cfg), 200)


def lattice(cfg: RunConfig, N: int):
    try:
        return build_lattice(cfg.get("d", 1), N, cfg.get("nu", 1.0))
    except ValueError as exc:
        raise ConfigError("N", str(exc)) from None


def _theta(cfg: RunConfig, n_sites: int, salt: int) -> np.ndarray:
    rng = np.random.default_rng([cfg["seed"], salt])
    return rng.uniform(0.0, 2.0 * np.pi, size=(cfg.get("theta_samples", 16), n_sites))


def _small_models(cfg: RunConfig):
    """The quantum test systems: exclusion on 3 sites, zero range on 2 sites with n_max = 3."""
    sep = ClassicalModelSpec.sep_from_densities(*cfg.get("h", (0.7, 0.3)))
    zrp = ClassicalModelSpec.zrp(cfg.get("h_zrp", (0.5, 0.2)), unit_rate, 3)
    return [("sep", sep, build_lattice(1, 4)), ("zrp", zrp, build_lattice(1, 3))]


def _checked_burn_in(total_number) -> int:
    auto = burn_in_samples(total_number)
    n = total_number.shape[1]
    if auto > n // 2:
        raise ConfigError("samples", f"automatic burn-in needs {auto} samples but only {n} were drawn; "
                                     f"raise samples to at least {2 * auto}")
    return auto


def lattice_run(spec, geom, functions, *, paths, samples, dt, burn_in, seed, initial=None):
    """Stationary ensemble; returns (FieldSeries, raw samples, auto burn-in in samples).

    ``dt`` and ``burn_in`` are macroscopic; the sampler works in L^2 units."""
    fld = FluctuationField(functions, geom, spec).fit()
    L2 = geom.L**2
    if initial is None:
        initial = product_initial(exact_mean_occupation(spec, geom), spec)
    s = sample_ensemble(spec, geom, initial, n_traj=paths, n_samples=samples, dt=dt * L2,
                        t_burn=burn_in * L2, seed=seed, observables=fld.weights_)
    auto = _checked_burn_in(s.total_number)
    series = lattice_series(s, fld, geom)
    series = FieldSeries({k: v[:, auto:] for k, v in series.xi.items()}, series.dt,
                         {**series.meta, "auto_burn_in_samples": auto})
    return series, s, auto


# quantum ----------------------------------------------------------------------

def run_consistency(cfg: RunConfig, variant: str) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, variant)
    geom = lattice(cfg, cfg["N"][0])
    t0 = time.perf_counter()
    L = assemble_lindblad(spec, geom)
    dev = check_classical_restriction(L, spec, geom)
    elapsed = time.perf_counter() - t0
    res.add("max |G(F(n)) - (G_cl F)(n)|", dev, dev < cfg["tol"], reference=cfg["tol"])
    res.add("runtime [s]", elapsed, elapsed < 1.0, reference=1.0)
    res.summary.update(sites=geom.n_sites, hilbert_dim=L.dim)
    return res


def run_gauge(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    for k, (name, spec, geom) in enumerate(_small_models(cfg)):
        L = assemble_lindblad(spec, geom)
        thetas = _theta(cfg, geom.n_sites, k)
        # superoperator route: every matrix unit at once
        dev = check_gauge_covariance(L, thetas)
        # operator route on the matrix units plus random dense operators
        rng = np.random.default_rng([cfg["seed"], 100 + k])
        D = L.dim
        ops = [np.outer(np.eye(D)[i], np.eye(D)[j]) for i in range(D) for j in range(D)]
        ops += [rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D)) for _ in range(4)]
        direct = 0.0
        for th in thetas:
            for A in ops:
                lhs = gauge_automorphism(L.space, th, heisenberg_generator(L, A))
                rhs = heisenberg_generator(L, gauge_automorphism(L.space, th, A))
                direct = max(direct, float(np.abs(lhs - rhs).max()))
        tol = cfg["tol"]
        res.add(f"{name}: superoperator deviation", dev, dev < tol, reference=tol)
        res.add(f"{name}: operator deviation", direct, direct < tol, reference=tol)
        # control: a jump that is not gauge covariant must be detected
        a0 = L.space.annihilation(0)
        ctrl = check_gauge_covariance(L.with_extra_jump(a0 + a0.conj().T), thetas)
        res.add(f"{name}: control (a + a^*) detected", ctrl, ctrl > 1e-3, reference=1e-3)
    return res


def run_uniqueness(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    for k, (name, spec, geom) in enumerate(_small_models(cfg)):
        L = assemble_lindblad(spec, geom)
        st = stationary_state(L)
        res.add(f"{name}: null space dimension", st.null_dimension, st.null_dimension == 1, reference=1)
        res.add(f"{name}: commutant dimension", st.commutant_dimension, st.commutant_dimension == 1,
                reference=1)
        res.add(f"{name}: ‖G*(rho)‖_max", st.residual, st.residual < 1e-9, reference=1e-9)
        rng = np.random.default_rng([cfg["seed"], 200 + k])
        X = rng.normal(size=(L.dim, L.dim)) + 1j * rng.normal(size=(L.dim, L.dim))
        rho0 = X @ X.conj().T
        rho0 /= np.trace(rho0).real
        rho_t = evolve(L, rho0, cfg.get("t", 1.0))
        rep = check_density_matrix(rho_t)
        res.add(f"{name}: evolved trace error", rep["trace_error"], rep["trace_error"] < 1e-9, reference=1e-9)
        res.add(f"{name}: evolved min eigenvalue", rep["min_eigenvalue"], rep["min_eigenvalue"] > -1e-8,
                reference=-1e-8)
    return res


def run_lift(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    for name, spec, geom in _small_models(cfg):
        L = assemble_lindblad(spec, geom)
        pi = classical_stationary(spec, geom)
        rho = lift_state(pi)
        resid = float(np.abs(schrodinger_generator(L, rho)).max())
        st = stationary_state(L, certify=False)
        diff = float(np.abs(rho - st.rho).max())
        leak = diagonal_leak(L)
        res.add(f"{name}: ‖G*(lift)‖_max", resid, resid < 1e-9, reference=1e-9)
        res.add(f"{name}: ‖lift - stationary‖_max", diff, diff < 1e-8, reference=1e-8)
        res.add(f"{name}: off-diagonal leak of G* on diagonal states", leak, leak < 1e-12, reference=1e-12)
        res.artifacts[f"lift_{name}.csv"] = (["state", "pi"], [[i, p] for i, p in enumerate(pi)])
    return res


# classical profiles -------------------------------------------------------------

def run_profile_sep(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    N = cfg["N"][0]
    spec = model_spec(cfg, SEP)
    geom = lattice(cfg, N)
    oracle = sep_mean_profile(spec, geom)
    x = geom.macro_coordinates()[:, 0]
    h0, h1 = cfg["h"]
    ramp = h0 + (h1 - h0) * x
    sup = float(np.abs(oracle - ramp).max())
    res.add("sup |oracle - ramp|", sup, sup < 2.0 / N, reference=2.0 / N)

    L2 = geom.L**2
    s = sample_ensemble(spec, geom, product_initial(ramp, spec), n_traj=cfg["paths"],
                        n_samples=cfg["samples"], dt=cfg["dt"] * L2, t_burn=cfg["burn_in"] * L2,
                        seed=cfg["seed"], observables=np.eye(geom.n_sites))
    auto = _checked_burn_in(s.total_number)
    obs = s.observables[:, auto:, :]
    est = [batch_estimate(obs[:, :, k], cfg["batches"]) for k in range(geom.n_sites)]
    mc = np.array([e.value for e in est])
    se = np.array([e.stderr for e in est])
    z = (mc - oracle) / se
    n_bad = int(np.sum(np.abs(z) >= 3))
    res.add("sites with |z| >= 3 (MC vs oracle)", n_bad, n_bad == 0, reference=0,
            note=f"max |z| = {np.abs(z).max():.3f} over {geom.n_sites} sites")
    res.summary.update(auto_burn_in_samples=auto, max_abs_z=float(np.abs(z).max()),
                       sup_mc_ramp=float(np.abs(mc - ramp).max()))
    res.artifacts["profile.csv"] = (["x", "mc", "stderr", "oracle", "ramp", "z"],
                                    np.column_stack([x, mc, se, oracle, ramp, z]))
    return res


def run_profile_zrp(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, ZRP)
    geom = lattice(cfg, cfg["N"][0])
    Q = build_generator_matrix(spec, geom)
    pi = stationary_distribution(Q)
    K = spec.alphabet_size
    margs = marginals(pi, geom.n_sites, K)
    tv = total_variation(pi, product_vector(margs))
    res.add("TV(stationary, product of marginals)", tv, tv < 1e-8, reference=1e-8)
    # fugacity read off the exact law: z_x = E g(n_x)
    states = enumerate_states(geom.n_sites, K)
    gt = spec.g_table()
    z = np.array([pi @ gt[states[:, x]] for x in range(geom.n_sites)])
    h = spec.boundary_rates(geom)
    resid = laplacian_matrix(geom) @ z + h - geom.exit_multiplicity * z
    hr = float(np.abs(resid).max())
    res.add("discrete-harmonic residual of E g(n_x)", hr, hr < 1e-10, reference=1e-10)
    pm = zrp_product_measure(spec, geom)
    md = float(np.abs(pm.marginals - margs).max())
    zd = float(np.abs(pm.fugacity - z).max())
    res.add("max |exact marginal - product-measure marginal|", md, md < 1e-8, reference=1e-8, gating=False)
    res.add("max |E g(n_x) - solved fugacity|", zd, zd < 1e-10, reference=1e-10, gating=False)
    res.summary.update(states=len(pi), n_max=spec.n_max, cap_mass=float(margs[:, -1].max()))
    x = geom.macro_coordinates()[:, 0]
    res.artifacts["fugacity.csv"] = (["x", "z_exact", "z_solved", "mean"],
                                     np.column_stack([x, z, pm.fugacity, margs @ np.arange(K)]))
    return res


# hydrodynamics ------------------------------------------------------------------

def hydro_test_functions():
    return [normalized_bump(c, 0.15, id=f"avg-{c:g}") for c in (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)]


def initial_profile(cfg: RunConfig):
    """Product initial state: the ramp reflected, far from the stationary one."""
    h0, h1 = cfg["h"]
    return lambda x: h1 + (h0 - h1) * np.asarray(x, dtype=float)


def sep_exact_mean(spec, geom, rho0, t_micro):
    """Finite-N mean occupation of the exclusion model; it solves a closed linear ODE."""
    A = laplacian_matrix(geom) - sp.diags(spec.boundary_rates(geom) + geom.exit_multiplicity)
    b = spec.boundary_rates(geom)
    rinf = spla.spsolve(A.tocsc(), -b)
    return rinf + spla.expm_multiply(A * t_micro, rho0 - rinf)


def run_hydro_convergence(cfg: RunConfig) -> ExperimentResult:
    """``paths`` is the ensemble size at the largest N; smaller N get paths * N_max / N,
    which keeps the standard error of the smeared averages roughly constant."""
    res = ExperimentResult()
    spec = model_spec(cfg, SEP)
    flux = sep_flux_function()
    t = cfg["t"]
    q0 = initial_profile(cfg)
    fns = hydro_test_functions()
    grid = MacroGrid(cfg["grid"])
    pde = solve_pde(q0, cfg["h"], flux, t, grid, dt=0.25 * grid.dx**2)
    xq = np.linspace(0.0, 1.0, 20001)
    qt = np.interp(xq, grid.nodes, pde.values)
    target = np.array([np.trapezoid(qt * f(xq), xq) for f in fns])
    errors, rows = [], []
    n_top = max(cfg["N"])
    for k, N in enumerate(cfg["N"]):
        geom = lattice(cfg, N)
        x = geom.macro_coordinates()[:, 0]
        F = np.column_stack([f.on_lattice(geom) for f in fns]) / geom.L
        paths = int(np.ceil(cfg["paths"] * n_top / N))
        s = sample_ensemble(spec, geom, product_initial(q0(x), spec), n_traj=paths, n_samples=1,
                            dt=t * geom.L**2, seed=cfg["seed"] + k, observables=F)
        vals = s.observables[:, 0, :]
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
        exact = sep_exact_mean(spec, geom, q0(x), t * geom.L**2) @ F
        z = (mean - exact) / se
        err = float(np.abs(mean - target).max())
        errors.append(err)
        res.add(f"N={N}: sup error", err, True, gating=False,
                note=f"{paths} paths, max stderr {se.max():.2e}, exact-mean sup error "
                     f"{np.abs(exact - target).max():.3e}")
        res.add(f"N={N}: max |z| against the exact finite-N mean", float(np.abs(z).max()),
                bool(np.abs(z).max() < 3), reference=3.0, gating=False)
        for f, m, e, ex, tg in zip(fns, mean, se, exact, target):
            rows.append([N, f.center, m, e, ex, tg])
    mono = all(b < a for a, b in zip(errors, errors[1:]))
    res.add("errors decrease monotonically in N", float(mono), mono, reference=1.0)
    res.add(f"N={cfg['N'][-1]} sup error", errors[-1], errors[-1] < 0.03, reference=0.03)
    res.summary.update(errors=errors)
    res.artifacts["smeared.csv"] = (["N", "center", "mc", "stderr", "exact_mean", "pde"], rows)
    res.artifacts["pde_profile.csv"] = (["x", "q"], np.column_stack([grid.nodes, pde.values]))
    return res


def run_numerics(cfg: RunConfig) -> ExperimentResult:
    """PDE order, semigroup law, stationary fixed point, master-equation bounds."""
    res = ExperimentResult()
    flux = sep_flux_function()
    h = (0.8, 0.2)
    t = 0.1
    errs, hs = [], []
    for n in (15, 31, 63, 127):
        grid = MacroGrid(n)
        x = grid.nodes
        q0 = 0.8 - 0.6 * x + 0.1 * np.sin(np.pi * x)
        p = solve_pde(q0, h, flux, t, grid, dt=0.5 * grid.dx**2)
        exact = 0.8 - 0.6 * x + 0.1 * np.exp(-np.pi**2 * t) * np.sin(np.pi * x)
        errs.append(float(np.abs(p.values - exact).max()))
        hs.append(grid.dx)
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    res.add("PDE convergence exponent", order, 1.8 <= order <= 2.2, reference=2.0)
    grid = MacroGrid(64)
    Lop = linearized_operator(stationary_profile(h, flux, grid), flux)
    v = np.sin(np.pi * grid.interior) + 0.3 * np.sin(3 * np.pi * grid.interior)
    law = float(np.abs(semigroup_apply(Lop, 0.03, semigroup_apply(Lop, 0.02, v))
                       - semigroup_apply(Lop, 0.05, v)).max())
    res.add("semigroup law ‖T(t1+t2) - T(t1)T(t2)‖", law, law < 1e-10, reference=1e-10)
    sp_ = stationary_profile(h, flux, grid)
    fp = float(np.abs(solve_pde(sp_, h, flux, 0.5).values - sp_.values).max())
    res.add("stationary profile fixed point", fp, fp < 1e-9, reference=1e-9)
    for k, (name, spec, geom) in enumerate(_small_models(cfg)):
        L = assemble_lindblad(spec, geom)
        rng = np.random.default_rng([cfg["seed"], 300 + k])
        X = rng.normal(size=(L.dim, L.dim)) + 1j * rng.normal(size=(L.dim, L.dim))
        rho0 = X @ X.conj().T
        rho0 /= np.trace(rho0).real
        worst_tr, worst_eig = 0.0, 1.0
        for tt in (0.1, 1.0, 10.0):
            rep = check_density_matrix(evolve(L, rho0, tt))
            worst_tr = max(worst_tr, rep["trace_error"])
            worst_eig = min(worst_eig, rep["min_eigenvalue"])
        res.add(f"{name}: trace preservation", worst_tr, worst_tr < 1e-9, reference=1e-9)
        res.add(f"{name}: positivity (min eigenvalue)", worst_eig, worst_eig > -1e-8, reference=-1e-8)
    res.artifacts["pde_convergence.csv"] = (["dx", "sup_error"], np.column_stack([hs, errs]))
    return res


# static covariances ---------------------------------------------------------------

def covariance_pairs(n_pairs: int):
    cat = catalogue()
    ids = sorted(cat)
    pairs = [(a, b) for i, a in enumerate(ids) for b in ids[i:]]
    rng = np.random.default_rng(12345)  # frozen selection, independent of the run seed
    pick = sorted(rng.choice(len(pairs), size=min(n_pairs, len(pairs)), replace=False))
    return [(cat[pairs[k][0]], cat[pairs[k][1]]) for k in pick]


def exact_static(spec, geom, f, g) -> float:
    """Finite-N E ξ(f) ξ(g) from the exact stationary covariance."""
    if spec.variant == SEP:
        C = sep_moment_oracle(spec, geom).covariance
    else:
        C = np.diag(zrp_product_measure(spec, geom).variance)
    scale = geom.n_particles / geom.L ** (2 * geom.dimension)
    return float(scale * f.on_lattice(geom) @ C @ g.on_lattice(geom))


def run_static_covariance(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg)
    geom = lattice(cfg, cfg["N"][0])
    pairs = covariance_pairs(cfg["pairs"])
    fns = list({f.id: f for p in pairs for f in p}.values())
    series, _, auto = lattice_run(spec, geom, fns, paths=cfg["paths"], samples=cfg["samples"], dt=cfg["dt"],
                                  burn_in=cfg["burn_in"], seed=cfg["seed"])
    if spec.variant == SEP:
        C = sep_moment_oracle(spec, geom).covariance
    else:
        C = np.diag(zrp_product_measure(spec, geom).variance)
    scale = geom.n_particles / geom.L ** (2 * geom.dimension)
    rows, n_ok = [], 0
    for f, g in pairs:
        est = static_covariance(series[f.id], series[g.id], cfg["batches"])
        ref = float(scale * f.on_lattice(geom) @ C @ g.on_lattice(geom))
        z = est.z(ref)
        ok = abs(z) < 3
        n_ok += ok
        res.add(f"{f.id}|{g.id}", est.value, ok, reference=ref, stderr=est.stderr, z=z, gating=False)
        rows.append([f.id, g.id, est.value, est.stderr, ref, z])
    need = int(np.ceil(0.9 * len(pairs)))
    res.add(f"pairs within 3 stderr (need >= {need} of {len(pairs)})", n_ok, n_ok >= need, reference=need)
    # centring check: mean of ξ consistent with zero for every function
    worst = 0.0
    for f in fns:
        m = batch_estimate(series[f.id], cfg["batches"])
        worst = max(worst, abs(m.z(0.0)))
    res.add("max |z| of the mean of ξ (exact centring)", worst, worst < 3.0, reference=3.0, gating=False)
    res.summary.update(auto_burn_in_samples=auto)
    res.artifacts["static_covariance.csv"] = (["f", "g", "mc", "stderr", "oracle", "z"], rows)
    return res


def long_range_pairs():
    return [(bump(0.5, 0.3), bump(0.5, 0.3)), (bump(0.3, 0.2), bump(0.75, 0.2)),
            (bump(0.5, 0.3), bump(0.3, 0.2)), (sine(1), sine(1)), (bump(0.25, 0.15), bump(0.6, 0.2))]


def run_long_range(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, SEP)
    flux = sep_flux_function()
    Ns = cfg["N"]
    pairs = long_range_pairs()
    lr = {}
    for N in Ns:
        geom = lattice(cfg, N)
        C = sep_moment_oracle(spec, geom).covariance
        off = C - np.diag(np.diag(C))
        scale = geom.n_particles / geom.L**2
        lr[N] = [float(scale * f.on_lattice(geom) @ off @ g.on_lattice(geom)) for f, g in pairs]
    n1, n2 = Ns[-2], Ns[-1]
    rows = []
    verdict_rows = []
    for k, (f, g) in enumerate(pairs):
        extrap = (n2 * lr[n2][k] - n1 * lr[n1][k]) / (n2 - n1)
        pred = predicted_static_covariance(f, g, cfg["h"], flux)
        rel = abs(extrap - pred.long_range) / abs(pred.long_range)
        rel_printed = abs(extrap - pred.long_range_printed) / abs(pred.long_range_printed)
        res.add(f"{f.id}|{g.id}: relative error (calibrated)", rel, rel < 0.05, reference=0.05)
        res.add(f"{f.id}|{g.id}: relative error (printed first-power form)", rel_printed,
                rel_printed < 0.05, reference=0.05, gating=False)
        verdict_rows.append(rel < rel_printed)
        rows.append([f.id, g.id, *[lr[N][k] for N in Ns], extrap, pred.long_range, pred.long_range_printed])
    # pointwise: -L C_xy against (Δρ)^2 G(x, y) at the largest N, away from the diagonal
    geom = lattice(cfg, n2)
    C = sep_moment_oracle(spec, geom).covariance
    x = geom.macro_coordinates()[:, 0]
    X, Y = np.meshgrid(x, x, indexing="ij")
    mask = np.abs(X - Y) > 0.1
    B = long_range_kernel(X, Y, cfg["h"], flux)
    pw = float(np.abs(geom.L * C[mask] - B[mask]).max() / np.abs(B[mask]).max())
    res.add(f"pointwise relative deviation at N={n2}", pw, True, gating=False)
    res.summary.update(oracle_prefers_calibrated=bool(all(verdict_rows)))
    res.artifacts["long_range.csv"] = (["f", "g", *[f"oracle_N{N}" for N in Ns], "extrapolated",
                                        "calibrated", "printed"], rows)
    return res


# dynamics -------------------------------------------------------------------------

def regression_functions():
    return bump(0.4, 0.25), bump(0.6, 0.25)


def run_regression(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, SEP)
    flux = sep_flux_function()
    N = cfg["N"][0]
    geom = lattice(cfg, N)
    grid = MacroGrid.matching_lattice(N)
    qbar = stationary_profile(cfg["h"], flux, grid)
    f, g = regression_functions()
    pairs = [(f.id, f.id), (f.id, g.id), (g.id, f.id)]
    lags = cfg["lags"]
    fns = [f, g]
    for scale, tag in ((1.0, ""), (2.0, "x2")):
        Lop = linearized_operator(qbar, flux, dphi_scale=scale)
        for fn in (f, g):
            for tau in lags:
                vals = semigroup_apply(Lop, tau, fn.on_lattice(geom), adjoint=True)
                fns.append(SampledFunction(adjoint_name(fn.id, tau, tag), vals))
    series, _, auto = lattice_run(spec, geom, fns, paths=cfg["paths"], samples=cfg["samples"], dt=cfg["dt"],
                                  burn_in=cfg["burn_in"], seed=cfg["seed"])
    rows = regression_test(series, pairs, lags, n_batches=cfg["batches"])
    ctrl = regression_test(series, pairs, lags, tag="x2", n_batches=cfg["batches"])
    n_ok = sum(r.verdict for r in rows)
    need = len(rows) - 1
    for r in rows:
        res.add(f"{r.statistic}", r.value, r.verdict, reference=0.0, stderr=r.stderr, z=r.z, gating=False)
    res.add(f"comparisons with |z| < 3 (need >= {need} of {len(rows)})", n_ok, n_ok >= need, reference=need)
    last = [r for r in ctrl if r.meta["lag"] == max(lags)]
    zmax = max(abs(r.z) for r in last)
    for r in ctrl:
        res.add(f"control {r.statistic}", r.value, True, reference=0.0, stderr=r.stderr, z=r.z, gating=False)
    res.add("doubled-Φ' control fails at the largest lag (max |z|)", zmax, zmax >= 3.0, reference=3.0)
    res.summary.update(auto_burn_in_samples=auto)
    res.artifacts["regression.csv"] = (
        ["statistic", "lag", "dynamic", "static_propagated", "difference", "stderr", "z"],
        [[r.statistic, r.meta["lag"], r.meta["dynamic"], r.meta["static_propagated"], r.value, r.stderr, r.z]
         for r in rows + ctrl])
    return res


def chaoticity_functions():
    return bump(0.35, 0.2), bump(0.45, 0.2), bump(0.8, 0.15)


def run_chaoticity(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, SEP)
    flux = sep_flux_function()
    N = cfg["N"][0]
    geom = lattice(cfg, N)
    qbar = stationary_density(cfg["h"], flux)
    f, g, k = chaoticity_functions()
    x = geom.macro_coordinates()[:, 0]
    # drift of the lattice Dynkin martingale: the discrete Laplacian, not f''
    lap = laplacian_matrix(geom) * geom.L**2
    fns = [f, g, k] + [SampledFunction(lstar_name(fn.id), flux.dphi(qbar(x)) * (lap @ fn.on_lattice(geom)))
                       for fn in (f, g, k)]
    series, _, auto = lattice_run(spec, geom, fns, paths=cfg["paths"], samples=cfg["samples"], dt=cfg["dt"],
                                  burn_in=cfg["burn_in"], seed=cfg["seed"])
    w = lambda y: flux.chi(qbar(y)) * flux.dphi(qbar(y))
    s_fg = 2.0 * inner(f, g, weight=w, derivative=1)
    s_ff = 2.0 * inner(f, f, weight=w, derivative=1)
    rows = chaoticity_test(series, f.id, g.id, k.id, cfg["window"], s_fg, s_ff, n_batches=cfg["batches"])
    for r in rows:
        gating = r.statistic != "same-window"
        res.add(r.statistic, r.value, r.verdict, reference=r.reference, stderr=r.stderr, z=r.z, gating=gating,
                note="quadrature flagged" if r.meta.get("quadrature_flag") else "")
    res.summary.update(auto_burn_in_samples=auto,
                       quadrature_flags=[bool(r.meta.get("quadrature_flag")) for r in rows])
    res.artifacts["chaoticity.csv"] = (["statistic", "value", "stderr", "reference", "z"],
                                       [[r.statistic, r.value, r.stderr, r.reference, r.z] for r in rows])
    return res


def base_bump() -> TestFunction:
    """Unit bump centred at 0 with support [-1, 1]; the profile f of f_{x0, eps}."""
    return TestFunction("base", BUMP, center=0.0, width=1.0)


def run_local_equilibrium(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec = model_spec(cfg, SEP)
    flux = sep_flux_function()
    N = cfg["N"][0]
    geom = lattice(cfg, N)
    x0 = cfg["x0"]
    eps_list = sorted(cfg["eps"], reverse=True)
    qbar = stationary_density(cfg["h"], flux)
    base = base_bump()
    x = geom.macro_coordinates()[:, 0]
    fns, names = [], {}
    for eps in eps_list:
        check_resolution(base.width, eps, geom.L)
        fe = base.rescaled(x0, eps, new_id=f"f[{eps:g}]")
        fns += [fe, SampledFunction(f"Lf[{eps:g}]", flux.dphi(qbar(x)) * fe.d2(x))]
        names[eps] = (fe.id, fe.id, f"Lf[{eps:g}]")
    series, _, auto = lattice_run(spec, geom, fns, paths=cfg["paths"], samples=cfg["samples"], dt=cfg["dt"],
                                  burn_in=cfg["burn_in"], seed=cfg["seed"])
    q0 = float(qbar(np.array([x0]))[0])
    chi0 = float(flux.chi(np.array([q0]))[0])
    dphi0 = float(flux.dphi(np.array([q0]))[0])
    rows = local_equilibrium_test(series, names, chi0, dphi0, base, base, eps_list, cfg["batches"])
    smeared = [r for r in rows if r.statistic.startswith("smeared")]
    grad = [r for r in rows if r.statistic.startswith("gradient")]
    C = sep_moment_oracle(spec, geom).covariance
    scale = geom.n_particles / geom.L**2
    for r in rows:
        res.add(r.statistic, r.value, r.verdict, reference=r.reference, stderr=r.stderr, z=r.z, gating=False)
        # exact finite-N value of the same statistic: separates the O(eps) long-range
        # correction from Monte Carlo error
        eps = r.meta["eps"]
        fe = base.rescaled(x0, eps)
        lhs = fe.on_lattice(geom) if r.statistic.startswith("smeared") else eps**2 * dphi0 * fe.d2(x)
        exact = float(scale * lhs @ C @ fe.on_lattice(geom))
        z = (r.value - exact) / r.stderr
        note = ""
        if r.statistic.startswith("smeared"):
            note = f"continuum prediction incl. long-range {predicted_static_covariance(fe, fe, cfg['h'], flux).total:.6g}"
        res.add(f"{r.statistic} vs exact finite-N oracle", r.value, abs(z) < 3, reference=exact, stderr=r.stderr,
                z=z, gating=False, note=note)
    mono = monotone_within_errors(smeared)
    res.add("smeared statistic approaches the limit monotonically", float(mono), mono, reference=1.0)
    res.add("smeared statistic final |z|", abs(smeared[-1].z), abs(smeared[-1].z) < 3, reference=3.0)
    res.add("gradient statistic final |z|", abs(grad[-1].z), abs(grad[-1].z) < 3, reference=3.0)
    res.summary.update(auto_burn_in_samples=auto, chi=chi0, dphi=dphi0, limit_smeared=smeared[0].reference,
                       limit_gradient=grad[0].reference)
    res.artifacts["local_equilibrium.csv"] = (
        ["statistic", "eps", "value", "stderr", "limit", "z"],
        [[r.statistic, r.meta["eps"], r.value, r.stderr, r.reference, r.z] for r in rows])
    return res


def ou_pairs():
    return [(bump(0.5, 0.3), bump(0.5, 0.3)), (bump(0.3, 0.2), bump(0.75, 0.2)),
            (bump(0.5, 0.3), bump(0.3, 0.2)), (sine(1), sine(1))]


def run_ou_crosscheck(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    flux = flux_for(cfg)
    h = cfg["h"]
    pairs = ou_pairs()
    # Lyapunov against the continuum prediction on the fine grid
    fine = ou_spec(h, flux, 128)
    Cf = lyapunov_covariance(fine)
    rows = []
    for f, g in pairs:
        lyap = fine.pair(f, g, Cf)
        pred = predicted_static_covariance(f, g, h, flux).total
        rel = abs(lyap - pred) / abs(pred)
        res.add(f"{f.id}|{g.id}: Lyapunov vs prediction (128 nodes)", rel, rel < 0.02, reference=0.02)
        rows.append([f.id, g.id, "lyapunov-vs-prediction", lyap, pred, rel])
    # simulated paths against the Lyapunov solution on the simulation grid
    spec = ou_spec(h, flux, cfg["grid"])
    C = lyapunov_covariance(spec)
    xi = spec.grid.interior
    fns = {f.id: f for p in pairs for f in p}
    paths = ou_simulate(spec, cfg["t_end"], cfg["paths"], cfg["seed"],
                        observables={k: f(xi) for k, f in fns.items()}, sample_dt=cfg["dt"],
                        t_burn=cfg["burn_in"])
    for f, g in pairs:
        est = static_covariance(paths.series[f.id], paths.series[g.id], cfg["batches"])
        ref = spec.pair(f, g, C)
        z = est.z(ref)
        res.add(f"{f.id}|{g.id}: OU sample vs Lyapunov", est.value, abs(z) < 3, reference=ref, stderr=est.stderr,
                z=z)
        rows.append([f.id, g.id, "ou-vs-lyapunov", est.value, ref, z])
    res.summary.update(dt_integrator=paths.dt_integrator)
    res.artifacts["ou_crosscheck.csv"] = (["f", "g", "comparison", "value", "reference", "rel_or_z"], rows)
    return res


# catalogue ------------------------------------------------------------------------

_QUANTUM = {"h": (0.7, 0.3), "tol": 1e-10, "theta_samples": 16}

EXPERIMENTS = [
    Experiment("chaoticity", "integrated noise increments: zero-range space-time covariance",
               "covariances of w increments over disjoint and overlapping windows",
               {"h": (0.8, 0.2), "N": (64,), "paths": 8, "samples": 40000, "dt": 0.0005, "burn_in": 0.5,
                "window": 0.02, "batches": 64}, run_chaoticity, True),
    Experiment("consistency-sep", "quantum generator restricted to number functions equals the classical one",
               "fermionic exclusion on 3 sites against its classical generator",
               {"variant": "sep", "N": (4,), "h": (0.7, 0.3), "tol": 1e-12},
               lambda c: run_consistency(c, SEP)),
    Experiment("consistency-zrp", "quantum generator restricted to number functions equals the classical one",
               "bounded-boson zero range on 2 sites (n_max = 3) against its classical generator",
               {"variant": "zrp", "N": (3,), "h": (0.5, 0.2), "n_max": 3, "tol": 1e-12},
               lambda c: run_consistency(c, ZRP)),
    Experiment("gauge-covariance", "gauge covariance of the quantum generator",
               "γ(θ)G(A) = G(γ(θ)A) over random phases and all matrix units", dict(_QUANTUM), run_gauge),
    Experiment("hydro-convergence", "hydrodynamic equation as the limit of the empirical density",
               "smeared empirical density at t = 0.1 against the PDE for growing N",
               {"h": (0.8, 0.2), "N": (50, 100, 200), "t": 0.1, "paths": 16000, "grid": 399},
               run_hydro_convergence, True),
    Experiment("lift-state", "gauge-averaged lift of the classical stationary law",
               "diagonal lift of the classical stationary vector is stationary for G*", dict(_QUANTUM), run_lift),
    Experiment("local-equilibrium", "local equilibrium under rescaled test functions",
               "small-scale static statistics against equilibrium limits at x0",
               {"h": (0.8, 0.2), "N": (400,), "x0": 0.5, "eps": (0.4, 0.2, 0.1), "paths": 8,
                "samples": 3000, "dt": 0.005, "burn_in": 0.3, "batches": 64}, run_local_equilibrium, True),
    Experiment("long-range", "long-range static two-point function of the stationary fluctuation field",
               "exact finite-N correlations against the Green's-function term",
               {"h": (0.8, 0.2), "N": (32, 64)}, run_long_range),
    Experiment("numerics", "numerical infrastructure",
               "PDE order, semigroup law, stationary fixed point, master-equation bounds",
               dict(_QUANTUM), run_numerics),
    Experiment("ou-crosscheck", "linear Langevin equation for the fluctuation field",
               "OU paths against the Lyapunov solution against the static prediction",
               {"h": (0.8, 0.2), "variant": "sep", "grid": 64, "paths": 32, "t_end": 10.0, "dt": 0.005,
                "burn_in": 0.5, "batches": 64}, run_ou_crosscheck, True),
    Experiment("profile-sep", "stationary density profile of the exclusion model",
               "Monte Carlo and moment-oracle profiles against the linear ramp",
               {"h": (0.8, 0.2), "N": (100,), "paths": 16, "samples": 20000, "dt": 0.001, "burn_in": 0.5,
                "batches": 128}, run_profile_sep, True),
    Experiment("profile-zrp", "product stationary measure of the zero-range model",
               "exact stationary vector of a truncated 3-site chain against its product form",
               {"h": (0.4, 0.1), "N": (4,), "n_max": 24}, run_profile_zrp),
    Experiment("regression", "regression of fluctuations along the linearized semigroup",
               "dynamic covariances against statically propagated ones, with a doubled-Φ' control",
               {"h": (0.8, 0.2), "N": (64,), "lags": (0.05, 0.1, 0.2), "paths": 8, "samples": 20000,
                "dt": 0.005, "burn_in": 0.5, "batches": 64}, run_regression, True),
    Experiment("static-covariance", "static two-point function of the stationary fluctuation field",
               "Monte Carlo static covariances against the exact finite-N oracle",
               {"variant": "sep", "h": (0.8, 0.2), "N": (32,), "pairs": 20, "paths": 8, "samples": 40000,
                "dt": 0.002, "burn_in": 0.5, "batches": 64}, run_static_covariance, True),
    Experiment("stationary-uniqueness", "uniqueness of the stationary state (trivial commutant)",
               "null space and commutant dimensions of the Lindblad generators", dict(_QUANTUM),
               run_uniqueness),
]
EXPERIMENTS.sort(key=lambda e: e.id)
BY_ID = {e.id: e for e in EXPERIMENTS}


def catalogue_entries() -> list[dict]:
    return [{"id": e.id, "anchor": e.anchor, "description": e.description, "monte_carlo": e.monte_carlo}
            for e in EXPERIMENTS]


def get_experiment(eid: str) -> Experiment:
    if eid not in BY_ID:
        raise ConfigError("experiment", f"unknown id {eid!r}; valid ids: {', '.join(sorted(BY_ID))}")
    return BY_ID[eid]


def run_experiment(cfg: RunConfig) -> ExperimentResult:
    exp = get_experiment(cfg["experiment"])
    return exp.runner(cfg.merged(exp.defaults))
