"""Acceptance criteria, each run through the experiment catalogue at its stated
tolerance.  Every test prints one PASS/FAIL line; Monte Carlo runs use seed 7."""
import time

import pytest

from qhydro.config import RunConfig
from qhydro.experiments import run_experiment

SEED = 7


def run(eid, **overrides):
    t0 = time.perf_counter()
    res = run_experiment(RunConfig({"experiment": eid, "seed": SEED, **overrides}))
    return res, time.perf_counter() - t0


def report(capsys, number, title, results, extra=""):
    ok = all(r.verdict for r in results)
    failed = [c.name for r in results for c in r.checks if c.gating and not c.passed]
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}"
    if extra:
        line += f" | {extra}"
    if failed:
        line += f" | failing: {'; '.join(failed)}"
    with capsys.disabled():
        print("\n" + line)
    return ok


def gating(res, name_part):
    return [c for c in res.checks if name_part in c.name]


def test_criterion_01_restriction(capsys):
    sep, t_sep = run("consistency-sep")
    zrp, t_zrp = run("consistency-zrp")
    dev = max(sep.checks[0].value, zrp.checks[0].value)
    assert report(capsys, 1, "quantum generator restricted to number functions",
                  [sep, zrp], f"max deviation {dev:.2e}, runtimes {t_sep:.3f} s / {t_zrp:.3f} s")


def test_criterion_02_gauge(capsys):
    res, _ = run("gauge-covariance", theta_samples=16)
    worst = max(c.value for c in res.checks if "deviation" in c.name)
    assert report(capsys, 2, "gauge covariance", [res], f"max deviation {worst:.2e} over 16 phases")


def test_criterion_03_stationary_state(capsys):
    uni, _ = run("stationary-uniqueness")
    lift, _ = run("lift-state")
    resid = max(c.value for c in lift.checks if "G*(lift)" in c.name)
    diff = max(c.value for c in lift.checks if "lift - stationary" in c.name)
    assert report(capsys, 3, "unique stationary state and its lift", [uni, lift],
                  f"‖G*(lift)‖ {resid:.2e}, ‖lift - rho‖ {diff:.2e}")


def test_criterion_04_zrp_product_form(capsys):
    res, _ = run("profile-zrp")
    tv, harm = res.checks[0].value, res.checks[1].value
    assert report(capsys, 4, "zero-range product form", [res], f"TV {tv:.2e}, harmonic residual {harm:.2e}")


def test_criterion_05_sep_profile(capsys):
    res, t = run("profile-sep")
    assert report(capsys, 5, "exclusion stationary profile at N=100", [res],
                  f"{res.checks[1].note}, oracle-ramp {res.checks[0].value:.2e}, {t:.0f} s")


@pytest.mark.slow
def test_criterion_06_hydrodynamic_convergence(capsys):
    res, t = run("hydro-convergence")
    errs = ", ".join(f"{e:.2e}" for e in res.summary["errors"])
    assert report(capsys, 6, "hydrodynamic convergence N=50/100/200", [res], f"sup errors {errs}, {t:.0f} s")


def test_criterion_07_long_range(capsys):
    lr, _ = run("long-range")
    mc, t = run("static-covariance")
    worst = max(c.value for c in lr.checks if c.gating)
    n_ok = [c for c in mc.checks if c.gating][0].value
    assert report(capsys, 7, "long-range covariance", [lr, mc],
                  f"max relative error {worst:.2e}; MC pairs within 3 stderr {n_ok}/20, {t:.0f} s")


def test_criterion_08_regression(capsys):
    res, t = run("regression")
    n_ok = gating(res, "comparisons")[0].value
    ctrl = gating(res, "doubled")[0].value
    assert report(capsys, 8, "regression along the linearized semigroup", [res],
                  f"{n_ok}/9 within 3 stderr, control max |z| {ctrl:.1f}, {t:.0f} s")


def test_criterion_09_chaoticity(capsys):
    res, t = run("chaoticity")
    zs = ", ".join(f"{c.name} z={c.z:.2f}" for c in res.checks if c.gating)
    assert report(capsys, 9, "chaoticity of the noise increments", [res], f"{zs}, {t:.0f} s")


@pytest.mark.slow
def test_criterion_10_local_equilibrium(capsys):
    res, t = run("local-equilibrium")
    z1 = gating(res, "smeared statistic final")[0].value
    z2 = gating(res, "gradient statistic final")[0].value
    assert report(capsys, 10, "local equilibrium at x0=0.5, N=400", [res],
                  f"final |z| smeared {z1:.2f}, gradient {z2:.2f}, {t:.0f} s")


def test_criterion_11_ou(capsys):
    res, t = run("ou-crosscheck")
    rel = max(c.value for c in res.checks if "Lyapunov vs prediction" in c.name)
    zmax = max(abs(c.z) for c in res.checks if c.z is not None)
    assert report(capsys, 11, "OU cross-validation", [res],
                  f"Lyapunov-prediction {rel:.1e} at 128 nodes, OU max |z| {zmax:.2f}, {t:.0f} s")


def test_criterion_12_numerics(capsys):
    res, _ = run("numerics")
    order = res.checks[0].value
    assert report(capsys, 12, "numerical infrastructure", [res], f"PDE order {order:.3f}")
