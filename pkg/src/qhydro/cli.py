"""Command line runner: ``qhydro run <config> [--experiment ID] [--seed S] [--out DIR]``.

Exit status: 0 when every gating check passes, 1 on a statistical failure,
2 on a configuration or engine error.
"""
from __future__ import annotations

import argparse
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, check_required, load_config
from .experiments import catalogue_entries, get_experiment
from .io import write_csv, write_json

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def versions() -> dict:
    import numba
    import sklearn

    return {"qhydro": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "scikit-learn": sklearn.__version__}


def run(cfg: RunConfig, out_dir=None) -> dict:
    """Execute one experiment, write its artifacts and report.json, return the report."""
    check_required(cfg)
    exp = get_experiment(cfg["experiment"])
    full = cfg.merged(exp.defaults)
    out = Path(out_dir or full.get("out") or f"runs/{exp.id}-{full.hash}")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = exp.runner(full)
    elapsed = time.perf_counter() - t0
    manifest = []
    for name, (header, rows) in sorted(result.artifacts.items()):
        write_csv(out / name, header, rows, comment=f"config_hash={full.hash} experiment={exp.id}")
        manifest.append(name)
    report = {
        "experiment": exp.id,
        "anchor": exp.anchor,
        "config": dict(full.values),
        "config_text": full.canonical(),
        "config_hash": full.hash,
        "verdict": "pass" if result.verdict else "fail",
        "checks": [c.as_dict() for c in result.checks],
        "summary": result.summary,
        "versions": versions(),
        "timing": {"seconds": elapsed},
        "manifest": manifest + ["report.json"],
    }
    write_json(out / "report.json", report)
    report["out"] = str(out)
    return report


def _print_report(report: dict, stream) -> None:
    print(f"{report['experiment']}: {report['verdict'].upper()}  "
          f"(hash {report['config_hash']}, {report['timing']['seconds']:.1f} s)", file=stream)
    for c in report["checks"]:
        mark = "ok  " if c["passed"] else ("FAIL" if c.get("gating", True) else "info")
        extra = f"  z={c['z']:.3f}" if "z" in c else ""
        ref = f"  ref={c['reference']:.6g}" if "reference" in c else ""
        print(f"  [{mark}] {c['name']}: {c['value']:.6g}{ref}{extra}", file=stream)
    print(f"  artifacts in {report['out']}", file=stream)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhydro", description=__doc__.splitlines()[0])
    p.add_argument("--list", action="store_true", help="print the experiment catalogue and exit")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("config", help="key = value configuration file")
    r.add_argument("--experiment", help="override the experiment id")
    r.add_argument("--seed", help="override the master seed (unsigned 64-bit)")
    r.add_argument("--out", help="output directory")
    r.add_argument("--list", action="store_true", help="print the experiment catalogue and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        for e in catalogue_entries():
            mc = " [monte carlo]" if e["monte_carlo"] else ""
            print(f"{e['id']:<22} {e['anchor']}{mc}")
        return EXIT_PASS
    if args.command != "run":
        build_parser().print_help(sys.stderr)
        return EXIT_ERROR
    try:
        cfg = load_config(args.config).with_overrides(experiment=args.experiment, seed=args.seed)
        report = run(cfg, args.out)
    except ConfigError as exc:
        print(f"configuration error in field '{exc.field}': {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"cannot read or write: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"engine error in experiment '{cfg.get('experiment')}': {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_ERROR
    _print_report(report, sys.stdout)
    return EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
