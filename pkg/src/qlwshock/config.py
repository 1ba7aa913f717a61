"""Run configuration: an INI file with strict validation.

Physics-relevant knobs (g2, delta, the seed) have no silent defaults and
must be spelled out; numerical knobs default sensibly. Unknown sections
or keys are rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigInvalid
from .model import ModelParams
from .wave_solver import SolverConfig

__all__ = ["Tolerances", "SeedSpec", "FanSpec", "BurgersSpec", "RunConfig",
           "load_config", "parse_config"]


@dataclass(frozen=True)
class Tolerances:
    """Fit windows and verdict thresholds; every report embeds these."""

    freeze_mu: float = 0.45        # gate for derivative-freeze residuals
    window_mu: float = 0.15        # gate for integrated-law residuals
    blowup_trust_mu: float = 0.05  # floor of the blowup fit decade
    shock_mu: float = 0.1          # collapsing-region threshold
    trapping_slack: float = 0.2
    blowup_tol: float = 0.2        # on the -1 blowup exponent
    band_max_ratio: float = 10.0
    tmu_tol: float = 0.2
    slope_mu_expansion: float = 0.8
    slope_lbmu: float = 0.8
    slope_lpsi0: float = 0.4
    cross_method_rel: float = 0.02
    cross_mu_gate: float = 0.1
    energy_band_linear: float = 1.1
    energy_band_shock: float = 2.0
    energy_resolved_mu: float = 0.05
    ebar_slope: float = 2.0
    ebar_slope_tol: float = 0.3
    shock_time_margin: float = 0.5  # t* <= -1 + margin*delta per run
    mech_bound_margin: float = 1.0  # residual <= margin*delta
    ratio_stability: float = 2.0    # factor-2 stability across sweeps


@dataclass(frozen=True)
class SeedSpec:
    profile: str
    amplitude: float = 1.0
    phi2_amplitude: float = 0.0
    samples: int = 2048
    file: str = ""


@dataclass(frozen=True)
class FanSpec:
    n_chars: int = 96
    record_target: int = 1200


@dataclass(frozen=True)
class BurgersSpec:
    profile: str = ""
    x_min: float = 0.0
    x_max: float = 6.283185307179586
    n_samples: int = 10000
    n_chars: int = 2000
    t_end: float = 2.0
    n_times: int = 101
    value: float = 0.5  # constant-profile level


@dataclass
class RunConfig:
    params: ModelParams
    seed: SeedSpec
    solver: SolverConfig
    fan: FanSpec
    tolerances: Tolerances
    burgers: BurgersSpec
    probe_count: int
    probe_times: tuple
    sweep_deltas: tuple
    out_dir: str
    raw_text: str = field(repr=False, default="")


_SCHEMA = {
    "model": {"g2", "delta", "r0", "hyperbolicity_floor"},
    "seed": {"profile", "amplitude", "phi2_amplitude", "samples", "file"},
    "solver": {"cfl", "stencil_order", "r_in", "r_out", "cells_per_delta",
               "t_end", "stop_mu", "max_grad"},
    "fan": {"n_chars", "record_target"},
    "probes": {"count", "times"},
    "sweep": {"deltas"},
    "tolerances": {f.name for f in fields(Tolerances)},
    "burgers": {f.name for f in fields(BurgersSpec)},
    "output": {"dir"},
}

_REQUIRED = {("model", "g2"), ("model", "delta"), ("seed", "profile")}


def _get(cp, section, key, cast, default, errors: list):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    if raw == "":
        return default
    try:
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        errors.append(f"{section}.{key}: cannot parse {raw!r} as {cast.__name__}")
        return default


def _float_list(raw: str):
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; raises ConfigInvalid with a
    field-level message on any problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigInvalid(f"INI parse error: {exc}") from exc

    errors: list[str] = []
    for section in cp.sections():
        if section not in _SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key in cp.options(section):
            if key not in _SCHEMA[section]:
                errors.append(f"unknown key {section}.{key}")
    for section, key in sorted(_REQUIRED):
        if not cp.has_option(section, key) or not cp.get(section, key).strip():
            errors.append(f"missing required key {section}.{key}")
    if errors:
        raise ConfigInvalid("; ".join(errors))

    g = _get
    try:
        params = ModelParams(
            g2=g(cp, "model", "g2", float, None, errors),
            delta=g(cp, "model", "delta", float, None, errors),
            r0=g(cp, "model", "r0", float, 2.0, errors),
            hyperbolicity_floor=g(cp, "model", "hyperbolicity_floor", float,
                                  0.01, errors))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"model: {exc}") from exc

    seed = SeedSpec(
        profile=g(cp, "seed", "profile", str, "", errors),
        amplitude=g(cp, "seed", "amplitude", float, 1.0, errors),
        phi2_amplitude=g(cp, "seed", "phi2_amplitude", float, 0.0, errors),
        samples=g(cp, "seed", "samples", int, 2048, errors),
        file=g(cp, "seed", "file", str, "", errors))

    max_grad = g(cp, "solver", "max_grad", float, None, errors)
    try:
        solver = SolverConfig(
            cfl=g(cp, "solver", "cfl", float, 0.4, errors),
            stencil_order=g(cp, "solver", "stencil_order", int, 4, errors),
            r_in=g(cp, "solver", "r_in", float, 0.25, errors),
            r_out=g(cp, "solver", "r_out", float, 4.0, errors),
            cells_per_delta=g(cp, "solver", "cells_per_delta", int, 320, errors),
            t_end=g(cp, "solver", "t_end", float, -1.0, errors),
            stop_mu=g(cp, "solver", "stop_mu", float, 0.02, errors),
            max_grad=max_grad)
    except ValueError as exc:
        raise ConfigInvalid(f"solver: {exc}") from exc

    fan = FanSpec(n_chars=g(cp, "fan", "n_chars", int, 96, errors),
                  record_target=g(cp, "fan", "record_target", int, 1200, errors))

    tol_kwargs = {}
    for f in fields(Tolerances):
        tol_kwargs[f.name] = g(cp, "tolerances", f.name, float, f.default, errors)
    tolerances = Tolerances(**tol_kwargs)

    burgers = BurgersSpec(
        profile=g(cp, "burgers", "profile", str, "", errors),
        x_min=g(cp, "burgers", "x_min", float, 0.0, errors),
        x_max=g(cp, "burgers", "x_max", float, 6.283185307179586, errors),
        n_samples=g(cp, "burgers", "n_samples", int, 10000, errors),
        n_chars=g(cp, "burgers", "n_chars", int, 2000, errors),
        t_end=g(cp, "burgers", "t_end", float, 2.0, errors),
        n_times=g(cp, "burgers", "n_times", int, 101, errors),
        value=g(cp, "burgers", "value", float, 0.5, errors))

    probe_count = g(cp, "probes", "count", int, 9, errors)
    probe_times = ()
    if cp.has_option("probes", "times") and cp.get("probes", "times").strip():
        try:
            probe_times = _float_list(cp.get("probes", "times"))
        except ValueError:
            errors.append("probes.times: cannot parse as float list")

    sweep_deltas = (0.16, 0.08, 0.04)
    if cp.has_option("sweep", "deltas") and cp.get("sweep", "deltas").strip():
        try:
            sweep_deltas = _float_list(cp.get("sweep", "deltas"))
        except ValueError:
            errors.append("sweep.deltas: cannot parse as float list")

    out_dir = g(cp, "output", "dir", str, "out", errors)

    if seed.profile not in ("zero", "bump", "file"):
        errors.append(f"seed.profile: unknown profile {seed.profile!r} "
                      "(use zero, bump, or file)")
    if seed.profile == "file" and not seed.file:
        errors.append("seed.file required when seed.profile = file")
    if errors:
        raise ConfigInvalid("; ".join(errors))

    return RunConfig(params=params, seed=seed, solver=solver, fan=fan,
                     tolerances=tolerances, burgers=burgers,
                     probe_count=probe_count, probe_times=probe_times,
                     sweep_deltas=sweep_deltas, out_dir=out_dir,
                     raw_text=text)


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)
