"""Shared test utilities: config builders, run drivers, and the exact
incoming-translate oracle for the linear equation."""

from __future__ import annotations

import numpy as np

from qlwshock import data_builder as db
from qlwshock import wave_solver as ws
from qlwshock.config import parse_config
from qlwshock.pipeline import run_pipeline

#: amplitude putting the bump's min of g2*phi1*phi1' at about -0.25
SHOCK_AMPLITUDE = 0.3054


def make_config_text(g2=1.0, delta=0.08, profile="bump",
                     amplitude=SHOCK_AMPLITUDE, phi2_amplitude=0.0,
                     cells_per_delta=320, n_chars=96, t_end=-1.0,
                     stop_mu=0.02, stencil_order=4, seed_samples=2048,
                     sweep_deltas="0.16, 0.08, 0.04", out_dir="out",
                     extra=""):
    return f"""
[model]
g2 = {g2}
delta = {delta}

[seed]
profile = {profile}
amplitude = {amplitude}
phi2_amplitude = {phi2_amplitude}
samples = {seed_samples}

[solver]
cells_per_delta = {cells_per_delta}
t_end = {t_end}
stop_mu = {stop_mu}
stencil_order = {stencil_order}

[fan]
n_chars = {n_chars}

[sweep]
deltas = {sweep_deltas}

[burgers]
profile = sin

[output]
dir = {out_dir}
{extra}
"""


def make_config(**kwargs):
    return parse_config(make_config_text(**kwargs))


def shock_run(delta=0.1, cells_per_delta=96, n_chars=48, **kwargs):
    """A small, fast quasilinear collapse run for unit tests."""
    cfg = make_config(delta=delta, cells_per_delta=cells_per_delta,
                      n_chars=n_chars, **kwargs)
    return run_pipeline(cfg)


def incoming_pulse_data(params, config):
    """Purely incoming linear pulse: r*phi translates exactly inward."""
    r = ws.radial_grid(config, params)
    s = (r - params.r0) / params.delta
    phi = params.delta ** 1.5 * db._bump(s)
    psi0 = params.delta ** 0.5 * db._dbump(s) + phi / r
    return db.CauchyData(r=r, phi=phi, psi0=psi0, taper_window=(0.0, 0.0),
                         params=params)


def translated_pulse(params, r, t):
    """Exact solution for incoming_pulse_data at g2 = 0."""
    x = r + (t + params.r0)
    s = (x - params.r0) / params.delta
    return x * params.delta ** 1.5 * db._bump(s) / r
