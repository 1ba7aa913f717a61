"""Full-run orchestration: build data, evolve, trace, verify, report.

A single run executes

    seed -> profile ODE -> Cauchy slice -> solver + online fan tracer
         -> shock detection -> residual suites -> report,

with the tracer driving both the foliation-density watchdog that ends the
run and the along-track samples every later check consumes. A sweep runs
the same pipeline per delta (optionally in parallel processes), then fits
the residual decay slopes.
"""

from __future__ import annotations

import csv as _csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import characteristics as ch
from . import data_builder as db
from . import diagnostics as dg
from . import wave_solver as ws
from .config import RunConfig, parse_config
from .errors import InsufficientCollapse, NoShock
from .model import ModelParams
from .numerics import loglog_slope
from .serialize import content_hash, fmt, write_csv, write_json

__all__ = ["RunArtifacts", "run_pipeline", "build_report",
           "write_run_artifacts", "run_sweep", "write_sweep_report",
           "build_seed"]

SCHEMA_VERSION = 1

LIMITATIONS = [
    "radial reduction: angular gradients vanish identically, so the "
    "angular flux F and the collapsing-region integral K are exactly zero",
    "the solver is trusted only while the minimum foliation density "
    "exceeds stop_mu; how far that can be pushed is resolution-dependent "
    "and recorded in the termination block",
]


def build_seed(cfg: RunConfig) -> db.SeedData:
    spec = cfg.seed
    if spec.profile == "file":
        rows = np.loadtxt(spec.file, delimiter=",", skiprows=1)
        return db.SeedData(s=rows[:, 0], phi1=rows[:, 1], phi2=rows[:, 2],
                           name=f"file:{Path(spec.file).name}")
    return db.make_seed(spec.profile, n_samples=spec.samples,
                        amplitude=spec.amplitude,
                        phi2_amplitude=spec.phi2_amplitude)


@dataclass
class RunArtifacts:
    config: RunConfig
    params: ModelParams
    seed: db.SeedData
    data: db.CauchyData
    shock_condition: db.ShockConditionRecord
    no_radiation: db.NoRadiationRecord
    evolve: ws.EvolveResult
    fan: ch.CharacteristicFan
    detection: ch.ShockDetection | None
    no_shock: bool
    geo: ch.GeometryDiagnostics
    expansion: dg.ExpansionResiduals
    trapping: dict
    blowup: dg.BlowupRecord | None
    tmu: dg.TmuRecord | None
    energy: dg.EnergyRecord
    report: dict


def run_pipeline(cfg: RunConfig, delta: float | None = None) -> RunArtifacts:
    """Execute the whole pipeline for one configuration (optionally with
    the pulse width overridden, for sweeps)."""
    params = cfg.params if delta is None else replace(cfg.params, delta=delta)
    tol = cfg.tolerances

    seed = build_seed(cfg)
    condition = db.check_shock_condition(seed, params)
    profile = db.build_phi0(seed, params)
    grid = ws.radial_grid(cfg.solver, params)
    data = db.assemble(seed, profile, params, grid)
    no_rad = db.check_no_outgoing_radiation(data, params)

    if cfg.probe_times:
        probes = list(cfg.probe_times)
    else:
        probes = list(np.linspace(-params.r0, cfg.solver.t_end,
                                  cfg.probe_count))

    solver = ws.RadialWaveSolver(data, cfg.solver, params)
    first = solver.fill_state(0).copy()
    record_dt = (cfg.solver.t_end + params.r0) / max(cfg.fan.record_target, 10)
    tracer = ch.FanTracer(first, params, n_chars=cfg.fan.n_chars,
                          record_dt=record_dt, t_end_hint=cfg.solver.t_end)

    def observer(prev, curr):
        tracer.advance(prev, curr)
        return tracer.mu_m() < cfg.solver.stop_mu

    result = ws.evolve(data, cfg.solver, params, probes, observer=observer)
    fan = tracer.finalize()

    detection, no_shock = None, False
    try:
        detection = ch.detect_shock(fan, stop_mu=cfg.solver.stop_mu)
    except NoShock:
        no_shock = True

    geo = ch.geometry_diagnostics(fan, params)
    expansion = dg.expansion_suite(fan, params, freeze_mu=tol.freeze_mu,
                                   window_mu=tol.window_mu)
    trapping = dg.trapping_violations(fan, shock_mu=tol.shock_mu,
                                      slack=tol.trapping_slack)
    blowup = None
    try:
        blowup = dg.blowup_suite(fan, geo, trust_mu=tol.blowup_trust_mu)
    except InsufficientCollapse:
        pass
    tmu = None
    if detection is not None:
        tmu = dg.tmu_bound_check(fan, detection.t_star, params,
                                 shock_mu=tol.shock_mu, tol=tol.tmu_tol)
    energy = dg.energy_suite(fan, params,
                             resolved_mu=tol.energy_resolved_mu)

    arts = RunArtifacts(config=cfg, params=params, seed=seed, data=data,
                        shock_condition=condition, no_radiation=no_rad,
                        evolve=result, fan=fan, detection=detection,
                        no_shock=no_shock, geo=geo, expansion=expansion,
                        trapping=trapping, blowup=blowup, tmu=tmu,
                        energy=energy, report={})
    arts.report = build_report(arts)
    return arts


def _check(name, statement, value, threshold, verdict):
    return {"name": name, "statement": statement, "value": value,
            "threshold": threshold, "verdict": verdict}


def build_report(a: RunArtifacts) -> dict:
    """Assemble the per-run report: metadata, measured records, and the
    per-check verdict table."""
    cfg, params, tol = a.config, a.params, a.config.tolerances
    d = params.delta
    checks = []

    checks.append(_check(
        "shock_condition",
        "min over the seed of g2*phi1*phi1' <= -1/6 forces collapse "
        "before t = -1",
        {"min_value": a.shock_condition.min_value,
         "arg_min": a.shock_condition.arg_min},
        db.SHOCK_THRESHOLD,
        "met" if a.shock_condition.met else "not_met"))

    checks.append(_check(
        "no_outgoing_radiation",
        "sup|Lbar phi| and sup|Lbar^2 phi| on the initial annulus stay "
        "O(delta^(3/2)); the ratio must be sweep-stable",
        {"ratio_lbar": a.no_radiation.ratio_lbar,
         "ratio_lbar2": a.no_radiation.ratio_lbar2},
        None, "info"))

    if a.detection is not None:
        ok = a.detection.t_star <= -1.0 + tol.shock_time_margin * d
        checks.append(_check(
            "shock_time",
            "extrapolated collapse time t* <= -1 + C*delta",
            a.detection.t_star, -1.0 + tol.shock_time_margin * d,
            "pass" if ok else "fail"))
    else:
        checks.append(_check("shock_time", "no collapse detected",
                             None, None, "skipped"))

    if a.shock_condition.met:
        ok = a.expansion.res_mech_bound <= tol.mech_bound_margin * d
        checks.append(_check(
            "mechanism_bound",
            "mu_m(t) <= 1 - (r0^2/2)(1/|t| - 1/r0) + C'*delta at all "
            "recorded times",
            a.expansion.res_mech_bound, tol.mech_bound_margin * d,
            "pass" if ok else "fail"))

    mu_m = a.fan.mu_m_series()
    gate = mu_m > tol.cross_mu_gate
    disc = np.abs(a.fan.mu_flow - a.fan.mu_transport).max(axis=1)
    rel = float((disc[gate] / mu_m[gate]).max()) if gate.any() else 0.0
    checks.append(_check(
        "cross_method_density",
        "flow-map and transport densities agree to within "
        "cross_method_rel * mu_m while mu_m > cross_mu_gate",
        rel, tol.cross_method_rel,
        "pass" if rel < tol.cross_method_rel else "fail"))

    checks.append(_check(
        "trapping",
        "Lbar(mu) <= -(1 - slack)/(4 t^2) at every sample with "
        "mu < shock_mu",
        a.trapping, 0,
        "pass" if a.trapping["n_violations"] == 0 else "fail"))

    if a.blowup is not None:
        slope_ok = abs(a.blowup.slope_that_psi0 + 1.0) <= tol.blowup_tol
        band_ok = (a.blowup.band_ratio_that <= tol.band_max_ratio
                   and a.blowup.band_ratio_alpha <= tol.band_max_ratio)
        checks.append(_check(
            "blowup_laws",
            "|That(psi0)| grows like 1/mu (log-log slope -1 +- tol) and "
            "mu*|That(psi0)|, mu*|tr(alphabar)| stay in a bounded band",
            {"slope": a.blowup.slope_that_psi0,
             "band_ratio_that": a.blowup.band_ratio_that,
             "band_ratio_alpha": a.blowup.band_ratio_alpha},
            {"slope": -1.0, "tol": tol.blowup_tol,
             "band_max_ratio": tol.band_max_ratio},
            "pass" if (slope_ok and band_ok) else "fail"))
    else:
        checks.append(_check("blowup_laws", "density never fell below the "
                             "collapse threshold", None, None, "skipped"))

    if a.tmu is not None and not a.tmu.vacuous:
        checks.append(_check(
            "tmu_growth",
            "positive part of T(mu)/mu grows no faster than the "
            "finite-depth frozen-profile law, within tol; delta-normalized "
            "amplitude recorded for sweep stability",
            {"exponent": a.tmu.exponent, "model_exponent": a.tmu.model_exponent,
             "amplitude": a.tmu.amplitude},
            {"tol": a.tmu.tol},
            "pass" if a.tmu.passed else "fail"))
    else:
        checks.append(_check("tmu_growth", "no positive density slope "
                             "(vacuously true)", None, None, "skipped"))

    lin = abs(params.g2) == 0.0
    band = tol.energy_band_linear if lin else tol.energy_band_shock
    lo, hi = a.energy.E_ratio_range_resolved
    ok = (1.0 / band) <= lo and hi <= band
    checks.append(_check(
        "energy_band",
        "outgoing energy E(t)/E(t0) stays within the band over the "
        "resolved window",
        {"lo": lo, "hi": hi}, band, "pass" if ok else "fail"))

    hard_failures = [c["name"] for c in checks
                     if c["verdict"] == "fail"
                     and c["name"] in ("trapping", "cross_method_density")]

    seed_arrays = (a.seed.s, a.seed.phi1, a.seed.phi2)
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "run",
        "config_hash": content_hash(cfg.raw_text, f"delta={d}"),
        "seed_hash": a.seed.content_hash(),
        "input_hash": content_hash(cfg.raw_text, *seed_arrays),
        "params": {"g2": params.g2, "delta": d, "r0": params.r0,
                   "hyperbolicity_floor": params.hyperbolicity_floor},
        "solver": {k: getattr(cfg.solver, k) for k in
                   ("cfl", "stencil_order", "r_in", "r_out",
                    "cells_per_delta", "t_end", "stop_mu")},
        "fan": {"n_chars": cfg.fan.n_chars,
                "record_target": cfg.fan.record_target},
        "tolerances": {k: getattr(tol, k) for k in
                       sorted(vars(tol))},
        "seed": {"name": a.seed.name, "boundary_class": a.seed.boundary_class(),
                 "pulse_points": a.data.pulse_points,
                 "taper_window": list(a.data.taper_window)},
        "termination": {"reason": a.evolve.termination.reason,
                        "t_final": a.evolve.termination.t_final,
                        "steps": a.evolve.termination.steps,
                        "mu_m_final": float(mu_m[-1])},
        "detection": None if a.detection is None else {
            "t_star": a.detection.t_star, "u_star": a.detection.u_star,
            "extrapolated": a.detection.extrapolated,
            "fit_a": a.detection.fit_a, "fit_b": a.detection.fit_b,
            "fit_window": list(a.detection.fit_window)},
        "no_shock": a.no_shock,
        "expansion_residuals": a.expansion.as_dict() | {
            "freeze_mu": a.expansion.freeze_mu,
            "window_mu": a.expansion.window_mu},
        "energy": {"E_ratio_range": list(a.energy.E_ratio_range),
                   "E_ratio_range_resolved":
                       list(a.energy.E_ratio_range_resolved),
                   "Ebar_initial": a.energy.Ebar_initial,
                   "Fbar_final": float(a.energy.Fbar[-1]),
                   "K": a.energy.K},
        "checks": checks,
        "hard_failures": hard_failures,
        "limitations": LIMITATIONS,
    }
    return report


def write_run_artifacts(a: RunArtifacts, out_dir) -> None:
    """Serialize one run: initial slice, probe states, fan series,
    residual series, and the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_csv(out / "cauchy.csv",
              ["r [length]", "phi [amp]", "psi0 [amp/time]"],
              [a.data.r, a.data.phi, a.data.psi0])
    write_json(out / "cauchy_meta.json", {
        "params": a.report["params"],
        "seed_hash": a.report["seed_hash"],
        "seed": a.report["seed"],
        "no_outgoing_radiation": vars(a.no_radiation),
        "shock_condition": vars(a.shock_condition),
    })

    probe_dir = out / "probes"
    for k, st in enumerate(a.evolve.states):
        write_csv(probe_dir / f"probe_{k:03d}.csv",
                  ["r [length]", "phi [amp]", "psi0 [amp/time]"],
                  [st.r, st.phi, st.psi0])
    write_json(out / "run.json", {
        "probe_times": [st.t for st in a.evolve.states],
        "termination": a.report["termination"],
    })

    fan = a.fan
    stride = max(1, fan.times.size // 240)
    idx = np.arange(0, fan.times.size, stride)
    if idx[-1] != fan.times.size - 1:
        idx = np.append(idx, fan.times.size - 1)
    n = fan.labels.size
    cols = {
        "t [time]": np.repeat(fan.times[idx], n),
        "u_bar [length]": np.tile(fan.labels, idx.size),
        "r [length]": fan.r[idx].ravel(),
        "c [speed]": fan.c[idx].ravel(),
        "mu_flow [1]": fan.mu_flow[idx].ravel(),
        "mu_transport [1]": fan.mu_transport[idx].ravel(),
        "Lbar_mu [1/time]": fan.lbar_mu[idx].ravel(),
        "tr_chibar_prime [1/length]": a.geo.tr_chibar_prime[idx].ravel(),
        "tr_alpha_bar [1/length/time]": a.geo.tr_alpha_bar[idx].ravel(),
        "That_psi0 [amp/time/length]": a.geo.that_psi0[idx].ravel(),
    }
    write_csv(out / "fan.csv", list(cols), list(cols.values()))

    series = dg.residual_series(fan, a.params)
    write_csv(out / "residuals.csv",
              [f"{k} [1]" if k != "t" else "t [time]" for k in series],
              list(series.values()))

    write_json(out / "report.json", a.report)


# -- sweeps -------------------------------------------------------------------

def _sweep_child(args):
    """Executed per delta, possibly in a worker process."""
    text, delta, out_dir = args
    cfg = parse_config(text)
    arts = run_pipeline(cfg, delta=delta)
    if out_dir:
        write_run_artifacts(arts, Path(out_dir) / f"delta_{fmt(delta)}")
    summary = dict(arts.report)
    summary["_residuals"] = arts.expansion.as_dict()
    return delta, summary


def run_sweep(cfg: RunConfig, deltas=None, jobs: int = 1,
              out_dir=None) -> dict:
    """Run one pipeline per delta and assemble the convergence table.

    Per-run failures are collected, not fatal; the aggregate verdict fails
    only on hard invariants (trapping, cross-method density) or on missed
    slope thresholds.
    """
    deltas = sorted(cfg.sweep_deltas if deltas is None else deltas,
                    reverse=True)
    if len(deltas) < 3:
        raise ValueError("sweep needs at least 3 delta values")
    tol = cfg.tolerances

    jobs = max(1, int(jobs))
    tasks = [(cfg.raw_text, d, str(out_dir) if out_dir else "") for d in deltas]
    summaries, errors = {}, {}
    if jobs == 1:
        for task in tasks:
            d = task[1]
            try:
                _, summary = _sweep_child(task)
                summaries[d] = summary
            except Exception as exc:  # noqa: BLE001 - isolation contract
                errors[d] = f"{type(exc).__name__}: {exc}"
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {d: pool.submit(_sweep_child, task)
                       for d, task in zip(deltas, tasks)}
            for d, fut in futures.items():
                try:
                    summaries[d] = fut.result()[1]
                except Exception as exc:  # noqa: BLE001
                    errors[d] = f"{type(exc).__name__}: {exc}"

    ok_deltas = [d for d in deltas if d in summaries]
    table, slopes = {}, {}
    for name in dg.EXPECTED_DELTA_POWERS:
        vals = [summaries[d]["_residuals"][name] for d in ok_deltas]
        table[name] = vals
        if len(vals) >= 2 and all(np.isfinite(v) for v in vals):
            if all(v < 1e-10 for v in vals):
                slopes[name] = "floor"
            else:
                s, ok = loglog_slope(ok_deltas, vals)
                slopes[name] = s if ok else "floor"
        else:
            slopes[name] = "floor"

    def _slope_ok(name, required):
        s = slopes.get(name)
        return s == "floor" or (isinstance(s, float) and s >= required)

    slope_verdicts = {
        "res_mu_expansion": {"slope": slopes.get("res_mu_expansion"),
                             "required": tol.slope_mu_expansion,
                             "verdict": "pass" if _slope_ok(
                                 "res_mu_expansion", tol.slope_mu_expansion)
                             else "fail"},
        "res_lbmu": {"slope": slopes.get("res_lbmu"),
                     "required": tol.slope_lbmu,
                     "verdict": "pass" if _slope_ok("res_lbmu", tol.slope_lbmu)
                     else "fail"},
        "res_lpsi0": {"slope": slopes.get("res_lpsi0"),
                      "required": tol.slope_lpsi0,
                      "verdict": "pass" if _slope_ok("res_lpsi0",
                                                     tol.slope_lpsi0)
                      else "fail"},
    }

    def _stability(vals):
        vals = [v for v in vals if np.isfinite(v) and v > 0]
        return max(vals) / min(vals) if vals else 1.0

    def _named_check(summary, name):
        return next(c for c in summary["checks"] if c["name"] == name)

    rad_ratio = _stability(
        [_named_check(summaries[d], "no_outgoing_radiation")["value"]
         ["ratio_lbar"] for d in ok_deltas])
    rad2_ratio = _stability(
        [_named_check(summaries[d], "no_outgoing_radiation")["value"]
         ["ratio_lbar2"] for d in ok_deltas])

    t_stars = {d: (summaries[d]["detection"] or {}).get("t_star")
               for d in ok_deltas}
    c_req = [max(0.0, (ts + 1.0) / d) for d, ts in t_stars.items()
             if ts is not None]
    shock_time_stable = (not c_req or max(c_req) == 0.0
                         or _stability(c_req) < tol.ratio_stability)

    ebars = [summaries[d]["energy"]["Ebar_initial"] for d in ok_deltas]
    if ebars and all(e < 1e-14 for e in ebars):
        ebar_slope, ebar_ok = "floor", True
    else:
        ebar_slope, _ = loglog_slope(ok_deltas, ebars)
        ebar_ok = abs(ebar_slope - tol.ebar_slope) <= tol.ebar_slope_tol \
            if np.isfinite(ebar_slope) else False

    hard_failures = []
    for d in ok_deltas:
        hard_failures.extend(
            f"delta={d}:{name}" for name in summaries[d]["hard_failures"])

    aggregate = "pass"
    if hard_failures or errors:
        aggregate = "fail"
    if any(v["verdict"] == "fail" for v in slope_verdicts.values()):
        aggregate = "fail"

    for d in summaries:
        summaries[d].pop("_residuals", None)

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "config_hash": content_hash(cfg.raw_text),
        "deltas": list(deltas),
        "errors": {fmt(k): v for k, v in errors.items()},
        "table": table,
        "slopes": slopes,
        "slope_verdicts": slope_verdicts,
        "no_radiation_stability": {
            "ratio_lbar_spread": rad_ratio, "ratio_lbar2_spread": rad2_ratio,
            "verdict": "pass" if (rad_ratio < tol.ratio_stability
                                  and rad2_ratio < tol.ratio_stability)
            else "fail"},
        "shock_time": {"t_stars": {fmt(k): v for k, v in t_stars.items()},
                       "c_required": c_req,
                       "verdict": "pass" if shock_time_stable else "fail"},
        "ebar_scaling": {"slope": ebar_slope,
                         "expected": tol.ebar_slope,
                         "tol": tol.ebar_slope_tol,
                         "verdict": "pass" if ebar_ok else "fail"},
        "hard_failures": hard_failures,
        "aggregate_verdict": aggregate,
        "runs": {fmt(d): summaries[d] for d in ok_deltas},
    }


def write_sweep_report(sweep_report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "sweep_report.json", sweep_report)
    deltas = sweep_report["deltas"]
    header = ["delta [length]"] + [f"{k} [1]" for k in sweep_report["table"]]
    cols = [deltas] + [sweep_report["table"][k] for k in sweep_report["table"]]
    write_csv(out / "sweep_table.csv", header, cols)
