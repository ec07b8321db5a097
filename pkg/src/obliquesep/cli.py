"""Command-line front end.

    obliquesep simulate   [--config FILE] [--out DIR]      write an instance bundle
    obliquesep svd-report BUNDLE                           singular spectrum of U*
    obliquesep project    BUNDLE [--rank-tol T]            linear oblique separation
    obliquesep separate   BUNDLE [--q Q] [--delta D]       sparse separation
    obliquesep experiment [--config FILE] [--out DIR]      three-noise-level study

Outputs go to ``--out``; without it, to ``$OBLIQUESEP_OUTPUT_DIR`` if set,
else to the bundle directory (or ``./run`` for simulate/experiment).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, RunManifest
from .exceptions import ObliqueSepError
from .experiment import (
    build_setup,
    linear_run,
    make_instance,
    nonlinear_run,
    run_experiment,
    sigma_table,
)
from .function_space import write_function_csv
from .simulator import NOISE_MODES, load_bundle, save_bundle
from .sparse_solver import write_coefficients_csv, write_solver_report

OUTPUT_ENV = "OBLIQUESEP_OUTPUT_DIR"


class CommandFailed(Exception):
    """Outputs were written but a success flag is false."""


def _out_dir(args, fallback):
    d = Path(args.out or os.environ.get(OUTPUT_ENV) or fallback)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _overrides(args):
    mapping = {
        "seed_support": "support_seed", "seed_coeff": "coeff_seed", "seed_noise": "noise_seed",
        "noise_mode": "noise_mode", "noise_percent": "noise_percent", "q": "q",
        "delta": "delta", "rank_tol": "rank_tol", "replicates": "replicates",
    }
    return {field: getattr(args, opt) for opt, field in mapping.items()
            if getattr(args, opt, None) is not None}


def _config_for(args, bundle=None):
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif bundle is not None and (Path(bundle) / "config").exists():
        cfg = ExperimentConfig.load(Path(bundle) / "config")
    else:
        cfg = ExperimentConfig()
    return cfg.replace(**_overrides(args))


def _load_instance(cfg, bundle):
    setup = build_setup(cfg)
    inst, _ = load_bundle(bundle, grid=setup.grid)
    inst = dataclasses.replace(inst, noise_percent=cfg.noise_percent, noise_mode=cfg.noise_mode)
    return setup, inst


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_simulate(args, manifest, out):
    cfg = manifest.config
    setup = build_setup(cfg)
    inst = make_instance(setup, cfg)
    save_bundle(inst, out, cfg.to_ini())
    manifest.outputs["bundle"] = str(out)
    manifest.metrics.update(M=len(setup.basis), K=len(inst.support), J=len(setup.family),
                            J_prime=len(setup.wperp))


def cmd_svd_report(args, manifest, out):
    cfg = manifest.config
    setup = build_setup(cfg)
    rows = sigma_table(setup.system)
    path = out / "svd_report.csv"
    _write_rows(path, ["n", "sigma_n", "lambda_n"], rows)
    manifest.outputs["svd_report"] = str(path)
    manifest.metrics.update(rank=len(rows), J_prime=len(setup.wperp),
                            largest=[r[1] for r in rows[:5]], smallest=[r[1] for r in rows[-5:]])
    print(f"rank N = {len(rows)}, W-perp basis size J' = {len(setup.wperp)}")
    print("largest five sigma:  " + "  ".join(f"{r[1]:.6g}" for r in rows[:5]))
    print("smallest five sigma: " + "  ".join(f"{r[1]:.6g}" for r in rows[-5:]))


def cmd_project(args, manifest, out):
    cfg = manifest.config
    setup, inst = _load_instance(cfg, args.bundle)
    results = linear_run(setup, inst, truncations=cfg.truncations)
    errors = {}
    for label, (rec, err) in results.items():
        name = "full" if label == "full" else f"r{setup.projector.rank - int(label.split('-')[1])}"
        path = out / f"recovered_linear_{name}.csv"
        write_function_csv(rec, path)
        manifest.outputs[f"recovered_{label}"] = str(path)
        errors[label] = err
        print(f"{label:>8}: relative L2 error {err:.6g}")
    metrics = {"rank": setup.projector.rank, "rank_tol": cfg.rank_tol, "rel_error": errors}
    (out / "project_metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    manifest.outputs["metrics"] = str(out / "project_metrics.json")
    manifest.metrics.update(metrics)


def cmd_separate(args, manifest, out):
    cfg = manifest.config
    setup, inst = _load_instance(cfg, args.bundle)
    state, rec, err, delta = nonlinear_run(setup, inst, cfg)
    write_coefficients_csv(state.c, out / "coefficients.csv")
    write_function_csv(rec, out / "recovered_nonlinear.csv")
    true_support = sorted(int(i) for i in inst.support)
    found = [int(i) for i in state.support(cfg.support_tol)]
    write_solver_report(state, out / "solver_report.json", cfg.support_tol, extra={
        "rel_error": err, "true_support": true_support, "support_exact": found == true_support,
    })
    manifest.outputs.update(coefficients=str(out / "coefficients.csv"),
                            recovered=str(out / "recovered_nonlinear.csv"),
                            report=str(out / "solver_report.json"))
    manifest.metrics.update(rel_error=err, K_constraints=state.n_constraints,
                            residual_sq=state.residual_sq, delta=delta, success=state.success)
    print(f"K = {state.n_constraints} constraints, residual {state.residual_sq:.6g} "
          f"(delta {delta:.6g}), relative L2 error {err:.6g}")
    if not state.success:
        raise CommandFailed(f"tolerance delta = {delta:.6g} not met after "
                            f"{state.n_constraints} constraints")


def cmd_experiment(args, manifest, out):
    cfg = manifest.config
    path = out / "summary.csv"
    manifest.outputs["summary"] = str(path)
    rows = run_experiment(cfg, path, jobs=args.jobs, bundle_root=out)
    manifest.metrics["rows"] = rows
    for r in rows:
        print(f"noise {r['noise_percent']:g}%  rep {r['replicate']}:  K = {r['K_constraints']}, "
              f"linear {r['rel_error_linear']:.3g}, nonlinear {r['rel_error_nonlinear']:.3g}")
    if not all(r["success"] for r in rows):
        raise CommandFailed("at least one separation did not meet its tolerance")


COMMANDS = {
    "simulate": cmd_simulate,
    "svd-report": cmd_svd_report,
    "project": cmd_project,
    "separate": cmd_separate,
    "experiment": cmd_experiment,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="obliquesep", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bundle):
        if bundle:
            p.add_argument("bundle", help="instance bundle directory")
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed-support", type=int)
        p.add_argument("--seed-coeff", type=int)
        p.add_argument("--seed-noise", type=int)
        p.add_argument("--noise-mode", choices=NOISE_MODES)
        p.add_argument("--noise-percent", type=float)
        p.add_argument("--rank-tol", type=float)
        return p

    common(sub.add_parser("simulate", help="generate an instance bundle"), False)
    common(sub.add_parser("svd-report", help="singular values of the complement set"), True)
    common(sub.add_parser("project", help="linear separation by oblique projection"), True)
    sep = common(sub.add_parser("separate", help="sparse nonlinear separation"), True)
    sep.add_argument("--q", type=float)
    sep.add_argument("--delta", type=float)
    exp = common(sub.add_parser("experiment", help="run the noise-level study"), False)
    exp.add_argument("--q", type=float)
    exp.add_argument("--delta", type=float)
    exp.add_argument("--replicates", type=int)
    exp.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    manifest = None
    out = None
    t0 = time.perf_counter()
    try:
        bundle = getattr(args, "bundle", None)
        if bundle is not None and not Path(bundle).is_dir():
            raise FileNotFoundError(f"no instance bundle at {bundle}")
        cfg = _config_for(args, bundle)
        manifest = RunManifest(args.command, cfg, arguments=vars(args), tool_version=__version__)
        out = _out_dir(args, bundle or "run")
        COMMANDS[args.command](args, manifest, out)
        status = 0
    except CommandFailed as exc:
        manifest.success, manifest.error = False, str(exc)
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    except (ObliqueSepError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if manifest is not None:
            manifest.success, manifest.error = False, str(exc)
        status = 1
    if manifest is not None:
        manifest.timings["total_seconds"] = time.perf_counter() - t0
        if out is not None:
            manifest.save(out / f"{args.command}.manifest.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
