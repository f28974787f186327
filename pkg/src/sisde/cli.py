"""Command-line interface: ``sisde <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical assertion failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import recurrence_classify, scale_function
from .config import EXACT_METHODS, ConfigError, ExperimentConfig, config_from_mapping, load_config
from .emit import emit_report, gnuplot_scale, write_json, write_scale_csv
from .ensemble import run_ensemble, scheme_cross_check, wz_convergence_study
from .exact import deterministic_solution, stratonovich_exact, wong_zakai_exact
from .framework import (AssumptionViolated, DriftOrderViolated, NoSignChange, OutOfDomain,
                        classify, model_triple)
from .integrators import METHODS, MODELS, simulate
from .noise import TimeGrid, parse_seed, path_seed, sample_path
from .params import PARAM_KEYS, ComplexRoot, ParameterError, SigmaZero

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FAN_SIZE = 20

# Default parameters when neither a config file nor flags provide them.
_DEFAULT_PARAMS = {"N": 100.0, "beta": 0.5, "mu_plus_gamma": 25.0, "sigma": 0.02, "i0": 10.0}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="TOML or JSON experiment file")
    g.add_argument("--seed", help="base seed, decimal or 0x-hex")
    g.add_argument("--out-dir", help="output directory")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--format", choices=("json", "csv"), default="json")
    for k in PARAM_KEYS:
        g.add_argument(f"--{k}", type=float, dest=k)
    g.add_argument("--scheme", choices=METHODS + EXACT_METHODS)
    g.add_argument("--model", choices=MODELS)
    g.add_argument("--substeps", type=int)
    g.add_argument("--cells", type=int)
    g.add_argument("--t-end", type=float, dest="t_end")
    g.add_argument("--n-paths", type=int, dest="n_paths")
    g.add_argument("--levels", type=int, dest="refinement_levels")

    ap = argparse.ArgumentParser(prog="sisde", description="Stochastic SIS model toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one trajectory with a chosen scheme")
    ex = sub.add_parser("exact", parents=[common], help="closed-form solutions")
    ex.add_argument("--kind", choices=("deterministic", "stratonovich", "wong_zakai"),
                    default="stratonovich")
    sub.add_parser("wz", parents=[common], help="Wong-Zakai refinement ladder")
    sub.add_parser("classify", parents=[common], help="extinction/persistence/recurrence verdicts")
    sub.add_parser("ensemble", parents=[common], help="Monte Carlo ensemble report")
    sub.add_parser("converge", parents=[common], help="Ito/Stratonovich scheme cross-check")
    sc = sub.add_parser("scale", parents=[common], help="scale function psi as CSV")
    sc.add_argument("--points", type=int, default=201)
    sc.add_argument("--y-min", type=float, default=-10.0, help="left end (log-odds units)")
    sc.add_argument("--y-max", type=float, default=2.0, help="right end (log-odds units)")
    return ap


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        raw = cfg.to_dict()
    else:
        raw = dict(_DEFAULT_PARAMS)
    overrides = {k: getattr(args, k) for k in PARAM_KEYS + (
        "scheme", "model", "substeps", "cells", "t_end", "n_paths", "refinement_levels")}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None:
        raw["base_seed"] = parse_seed(args.seed)
    if args.out_dir is not None:
        raw["out_dir"] = args.out_dir
    return config_from_mapping(raw)


def _one_trajectory(cfg, i: int):
    """Trajectory of ensemble path ``i`` (same seed as in run_ensemble)."""
    path = sample_path(TimeGrid(cfg.t_end, cfg.cells), path_seed(cfg.base_seed, i))
    if cfg.scheme == "stratonovich_exact":
        return stratonovich_exact(cfg.params, path)
    if cfg.scheme == "wong_zakai_exact":
        return wong_zakai_exact(cfg.params, path)
    return simulate(cfg.params, path, cfg.spec)


def _cmd_simulate(cfg, args):
    tr = _one_trajectory(cfg, 0)
    stem = "simulate_" + tr.provenance.method.replace("/", "_")
    _write_traj(cfg, tr, stem, args.format)


def _write_traj(cfg, tr, stem, fmt):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / f"{stem}.csv").open("w") as fh:
        tr.to_csv(fh)
    summary = {"schema_version": 1, "kind": "trajectory", "method": tr.provenance.method,
               "terminal": float(tr.terminal), "min": tr.diag.min_state,
               "max": tr.diag.max_state, "clamp_count": tr.diag.clamp_count,
               "underflow_count": tr.diag.underflow_count, "cap_count": tr.diag.cap_count,
               "csv": f"{stem}.csv"}
    if fmt == "json":
        write_json(out / f"{stem}.json", summary)
    print(json.dumps(summary, sort_keys=True))


def _cmd_exact(cfg, args):
    grid = TimeGrid(cfg.t_end, cfg.cells)
    if args.kind == "deterministic":
        tr = deterministic_solution(cfg.params, grid)
    else:
        path = sample_path(grid, path_seed(cfg.base_seed, 0))
        fn = stratonovich_exact if args.kind == "stratonovich" else wong_zakai_exact
        tr = fn(cfg.params, path)
    _write_traj(cfg, tr, f"exact_{args.kind}", args.format)


def _print_table(t):
    print(f"# {t.label}")
    print(f"{'mesh':>12} {'median':>12} {'iqr':>12} {'order':>8}")
    for h, m, q, o in t.rows():
        print(f"{h:12.4e} {m:12.4e} {q:12.4e} {'' if o is None else f'{o:8.3f}':>8}")


def _cmd_wz(cfg, args):
    if cfg.refinement_levels < 2:
        cfg = cfg.replace(refinement_levels=2)
    t = wz_convergence_study(cfg, workers=args.workers)
    emit_report(t, cfg.out_dir, "wz", args.format)
    _print_table(t)


def _cmd_converge(cfg, args):
    if cfg.refinement_levels < 1:
        cfg = cfg.replace(refinement_levels=1)
    a, b = scheme_cross_check(cfg, workers=args.workers)
    for stem, t in (("converge_corrected", a), ("converge_gray", b)):
        emit_report(t, cfg.out_dir, stem, args.format)
        _print_table(t)


def _cmd_classify(cfg, args):
    out = {"schema_version": 1, "params": cfg.params.to_dict(), "delta": cfg.params.delta,
           "r0": cfg.params.r0, "r0_stochastic": cfg.params.r0_stochastic, "models": {}}
    for name in ("ito-gray", "strat-corrected", "deterministic"):
        out["models"][name] = classify(model_triple(name, cfg.params)).to_dict()
    # The scale function is defined only for sigma > 0.
    out["recurrence"] = (recurrence_classify(cfg.params).to_dict()
                         if cfg.params.sigma > 0 else None)
    print(json.dumps(out, sort_keys=True, indent=2, allow_nan=False))


def _cmd_ensemble(cfg, args):
    r = run_ensemble(cfg, workers=args.workers)
    fan = [_one_trajectory(cfg, i) for i in range(min(cfg.n_paths, FAN_SIZE))]
    emit_report(r, cfg.out_dir, "ensemble", args.format, trajs=fan)
    print(json.dumps({"mean": r.mean, "sd": r.sd, "quantiles": r.quantiles,
                      "lyapunov_mean": r.lyapunov["mean"], "timing": r.timing}, sort_keys=True))


def _cmd_scale(cfg, args):
    if not args.y_min < 0 < args.y_max:
        raise ConfigError("need y-min < 0 < y-max")
    xs = np.linspace(args.y_min, args.y_max, args.points)
    psi = [scale_function(cfg.params, float(x)) for x in xs]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv = write_scale_csv(out / "scale.csv", xs, psi)
    (out / "scale.gp").write_text(gnuplot_scale(csv.name, "scale.png"))
    print(csv)


_COMMANDS = {"simulate": _cmd_simulate, "exact": _cmd_exact, "wz": _cmd_wz,
             "converge": _cmd_converge, "classify": _cmd_classify,
             "ensemble": _cmd_ensemble, "scale": _cmd_scale}

_NUMERIC_ERRORS = (ArithmeticError, AssumptionViolated, DriftOrderViolated, NoSignChange,
                   OutOfDomain, ComplexRoot, SigmaZero)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _COMMANDS[args.command](cfg, args)
    except _NUMERIC_ERRORS as exc:
        print(f"numerical assertion failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
