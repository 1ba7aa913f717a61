"""Command-line driver.

Subcommands:
    burgers     exact characteristic oracle for the 1D conservation law
    build-data  construct and serialize the short-pulse initial slice
    run         full pipeline: data -> evolve -> trace -> verify -> report
    sweep       one run per delta plus the convergence table
    report      render an existing report.json as text

All subcommands take --config PATH; --out, --seed-profile, --delta and
--jobs override the corresponding config entries. Exit codes: 0 on
success, 2 on configuration errors, 1 when a sweep fails a hard invariant.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import burgers as bg
from . import data_builder as db
from . import pipeline
from . import wave_solver as ws
from .config import RunConfig, load_config
from .errors import ConfigInvalid, QlwError
from .serialize import fmt, write_csv, write_json


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.delta is not None:
        cfg.params = replace(cfg.params, delta=args.delta)
    if args.seed_profile is not None:
        cfg.seed = replace(cfg.seed, profile=args.seed_profile)
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _burgers_problem(cfg: RunConfig) -> bg.BurgersProblem:
    spec = cfg.burgers
    if not spec.profile:
        raise ConfigInvalid("burgers.profile is required for the burgers "
                            "subcommand")
    x = np.linspace(spec.x_min, spec.x_max, spec.n_samples)
    if spec.profile == "sin":
        u0 = np.sin(x)
    elif spec.profile == "linear":
        u0 = -x
    elif spec.profile == "const":
        u0 = np.full_like(x, spec.value)
    else:
        raise ConfigInvalid(f"burgers.profile: unknown profile "
                            f"{spec.profile!r} (use sin, linear, const)")
    return bg.BurgersProblem(x, u0)


def cmd_burgers(cfg: RunConfig) -> int:
    problem = _burgers_problem(cfg)
    report = bg.run_burgers(problem, t_end=cfg.burgers.t_end,
                            n_chars=cfg.burgers.n_chars,
                            n_times=cfg.burgers.n_times)
    out = Path(cfg.out_dir)
    lines = report.lines
    header = ["t [time]"]
    cols = [lines.times]
    for k in range(lines.x0.size):
        header.append(f"x_char_{k} [length]")
        cols.append(lines.positions[:, k])
    for k in range(lines.x0.size):
        header.append(f"mu_{k} [1]")
        cols.append(report.mu_tracks[:, k])
    write_csv(out / "burgers_tracks.csv", header, cols)
    write_json(out / "burgers_report.json", {
        "t_star_analytic": report.t_star_analytic,
        "t_star_numeric": report.t_star_numeric,
        "crossing_pair": report.crossing_pair,
        "has_shock": report.has_shock,
    })
    if report.has_shock:
        print(f"shock: analytic t* = {fmt(report.t_star_analytic)}, "
              f"first crossing at t = {fmt(report.t_star_numeric)}")
    else:
        print("no shock: slope never negative")
    return 0


def cmd_build_data(cfg: RunConfig) -> int:
    seed = pipeline.build_seed(cfg)
    condition = db.check_shock_condition(seed, cfg.params)
    profile = db.build_phi0(seed, cfg.params)
    grid = ws.radial_grid(cfg.solver, cfg.params)
    data = db.assemble(seed, profile, cfg.params, grid)
    no_rad = db.check_no_outgoing_radiation(data, cfg.params)

    out = Path(cfg.out_dir)
    write_csv(out / "cauchy.csv",
              ["r [length]", "phi [amp]", "psi0 [amp/time]"],
              [data.r, data.phi, data.psi0])
    write_json(out / "cauchy_meta.json", {
        "params": {"g2": cfg.params.g2, "delta": cfg.params.delta,
                   "r0": cfg.params.r0},
        "seed_hash": seed.content_hash(),
        "seed": {"name": seed.name,
                 "boundary_class": seed.boundary_class(),
                 "pulse_points": data.pulse_points},
        "no_outgoing_radiation": vars(no_rad),
        "shock_condition": vars(condition),
    })
    print(f"wrote {out / 'cauchy.csv'} ({data.pulse_points} pulse points); "
          f"|Lbar phi|/d^1.5 = {no_rad.ratio_lbar:.4g}, "
          f"|Lbar2 phi|/d^1.5 = {no_rad.ratio_lbar2:.4g}")
    return 0


def cmd_run(cfg: RunConfig) -> int:
    arts = pipeline.run_pipeline(cfg)
    pipeline.write_run_artifacts(arts, cfg.out_dir)
    _print_run_summary(arts.report)
    return 0


def cmd_sweep(cfg: RunConfig, jobs: int) -> int:
    report = pipeline.run_sweep(cfg, jobs=jobs, out_dir=cfg.out_dir)
    pipeline.write_sweep_report(report, cfg.out_dir)
    print(f"sweep over deltas {report['deltas']}: "
          f"{report['aggregate_verdict']}")
    for name, row in report["slope_verdicts"].items():
        print(f"  {name}: slope {row['slope']} "
              f"(required >= {row['required']}) -> {row['verdict']}")
    if report["errors"]:
        for d, msg in report["errors"].items():
            print(f"  delta {d} failed: {msg}")
    return 1 if report["aggregate_verdict"] == "fail" else 0


def cmd_report(cfg: RunConfig) -> int:
    path = Path(cfg.out_dir) / "report.json"
    if not path.exists():
        path = Path(cfg.out_dir) / "sweep_report.json"
    if not path.exists():
        print(f"no report.json or sweep_report.json under {cfg.out_dir}",
              file=sys.stderr)
        return 2
    import json
    report = json.loads(path.read_text())
    if report.get("kind") == "run":
        _print_run_summary(report)
    else:
        print(f"sweep over {report['deltas']}: {report['aggregate_verdict']}")
        for name, slope in report["slopes"].items():
            print(f"  {name}: slope {slope}")
    return 0


def _print_run_summary(report: dict) -> None:
    term = report["termination"]
    print(f"run delta={fmt(report['params']['delta'])} "
          f"g2={fmt(report['params']['g2'])}: "
          f"terminated [{term['reason']}] at t = {fmt(term['t_final'])}, "
          f"mu_m = {fmt(term['mu_m_final'])}")
    det = report["detection"]
    if det is not None:
        print(f"  collapse: t* = {fmt(det['t_star'])} "
              f"at label u = {fmt(det['u_star'])}"
              + (" (extrapolated)" if det["extrapolated"] else ""))
    else:
        print("  no collapse detected")
    for c in report["checks"]:
        print(f"  [{c['verdict']:>7s}] {c['name']}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qlwshock",
        description="shock-formation simulation and verification suite")
    parser.add_argument("command",
                        choices=["burgers", "build-data", "run", "sweep",
                                 "report"])
    parser.add_argument("--config", required=True, help="INI config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed-profile", default=None,
                        help="override seed.profile")
    parser.add_argument("--delta", type=float, default=None,
                        help="override model.delta")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel runs in a sweep")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        if args.command == "burgers":
            return cmd_burgers(cfg)
        if args.command == "build-data":
            return cmd_build_data(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, jobs=args.jobs)
        return cmd_report(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except QlwError as exc:
        print(f"run error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
