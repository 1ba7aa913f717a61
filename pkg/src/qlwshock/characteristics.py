"""Incoming characteristic fan: tracing, dual-route inverse density, and
shock detection.

Radially the incoming null generator is exactly Lbar = d_t - c d_r, so a
track with label u (its initial offset r(-2) - r0) obeys dr/dt = -c.
The inverse foliation density mu is computed two independent ways:

* flow-map route: mu = c * kappa with kappa = dr/du differenced across
  adjacent labels at fixed t;
* transport route: along each track dmu/dt = m + mu e with
  m = -(1/2) d(c^2)/drho T(rho) and e = (1/(2c^2)) d(c^2)/drho Lbar(rho).
  Radially T = kappa d_r and mu = c kappa close the equation into
  dmu/dt = mu * G,  G = e + 3 g2 c^3 psi0 d_r(psi0),
  which uses only along-track field samples and stays positive until the
  sampled gradient diverges. This route is the trusted one near collapse,
  where label differencing loses accuracy as the tracks cluster.

The tracer advances inside the solver loop (one position step per solver
step, linear in t across the step), so interpolation is cubic in r and
effectively continuous in t; a batch trace() over stored probe states
substeps each interval the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FanReordered, LeftDomain, NoShock
from .model import ModelParams
from .numerics import CubicInterpolator, deriv1
from .wave_solver import FieldState

__all__ = ["CharacteristicFan", "FanTracer", "ShockDetection",
           "GeometryDiagnostics", "trace", "mu_from_flowmap",
           "mu_from_transport", "detect_shock", "geometry_diagnostics",
           "flowmap_density"]


def _interp_fields(state: FieldState, interp: CubicInterpolator, rq,
                   fields=("psi0", "dr_psi0", "lap_phi")):
    j, w = interp.weights(rq)
    return tuple(interp.apply(getattr(state, name), j, w) for name in fields)


def _speed_arrays(g2: float, psi0):
    q = 1.0 + 3.0 * g2 * psi0 * psi0
    c2 = 1.0 / q
    return q, c2, np.sqrt(c2)


class FanTracer:
    """Advances track positions and the transport-route density in lock
    step with the solver, recording along-track samples.

    Records are taken on a fixed time cadence, densified whenever the
    minimum density has dropped by mu_drop since the last record so the
    collapse tail is well sampled.
    """

    def __init__(self, initial: FieldState, params: ModelParams,
                 n_chars: int = 64, record_dt: float | None = None,
                 mu_drop: float = 0.005, t_end_hint: float = -1.0):
        if n_chars < 3:
            raise ValueError("need at least 3 characteristics")
        self.params = params
        self.g2 = params.g2
        self.labels = np.linspace(0.0, params.delta, n_chars)
        self.r_pos = params.r0 + self.labels.copy()
        self.interp = CubicInterpolator(initial.r[0], initial.dr,
                                        initial.r.size)
        self._r_lo = initial.r[0] + 2 * initial.dr
        self._r_hi = initial.r[-1] - 2 * initial.dr

        psi0_init = self.interp(initial.psi0, self.r_pos)
        _, _, c_init = _speed_arrays(self.g2, psi0_init)
        self.mu = c_init.copy()  # transport initial value: mu = c on the slice

        if record_dt is None:
            record_dt = max((t_end_hint - initial.t) / 1200.0, 1e-6)
        self.record_dt = float(record_dt)
        self.mu_drop = float(mu_drop)
        self._next_record_t = initial.t
        self._last_record_mu = np.inf
        self.reordered_at: tuple[float, int] | None = None

        self._rows: dict[str, list] = {k: [] for k in (
            "t", "r", "c", "psi0", "dr_psi0", "lbar_psi0", "mu_transport",
            "G", "e", "mu_flow", "kappa_flow")}
        self._record(initial)

    # -- along-track field sampling ----------------------------------------

    def _sample(self, state: FieldState, rq):
        """psi0, d_r psi0, and the transport ingredients at positions rq."""
        psi0, dpsi, lap = _interp_fields(state, self.interp, rq)
        q, c2, c = _speed_arrays(self.g2, psi0)
        dt_psi0 = c2 * lap
        lbar_psi0 = dt_psi0 - c * dpsi
        e = -1.5 * self.g2 * c2 * (2.0 * psi0 * lbar_psi0)
        G = e + 3.0 * self.g2 * c2 * c * psi0 * dpsi
        return psi0, dpsi, c, lbar_psi0, e, G

    # -- advancing ----------------------------------------------------------

    def advance(self, prev: FieldState, curr: FieldState,
                n_substeps: int = 1) -> bool:
        """Advance tracks and transport density from prev.t to curr.t.

        Position uses the same 4-stage scheme as the solver with the speed
        field linear in t across the interval; the linear transport ODE is
        integrated exactly for trapezoidal G. Returns True once the fan
        has reordered (terminal)."""
        if self.reordered_at is not None:
            return True
        t0, t1 = prev.t, curr.t
        if t1 <= t0:
            return False
        h = (t1 - t0) / n_substeps
        for k in range(n_substeps):
            r = self.r_pos
            ta = t0 + k * h
            c1 = self._stage_c(prev, curr, ta, r)
            c2 = self._stage_c(prev, curr, ta + 0.5 * h, r - 0.5 * h * c1)
            c3 = self._stage_c(prev, curr, ta + 0.5 * h, r - 0.5 * h * c2)
            c4 = self._stage_c(prev, curr, ta + h, r - h * c3)
            r_new = r - (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4)

            # transport update over the substep (exact integrating factor
            # for trapezoidal G)
            G0 = self._G_blend(prev, curr, k / n_substeps, r)
            G1 = self._G_blend(prev, curr, (k + 1.0) / n_substeps, r_new)
            self.mu *= np.exp(0.5 * h * (G0 + G1))
            self.r_pos = r_new

        if np.min(self.r_pos) < self._r_lo or np.max(self.r_pos) > self._r_hi:
            raise LeftDomain(f"a track exited the domain at t = {t1:.6g}")

        mu_min = float(self.mu.min())
        if (t1 >= self._next_record_t - 1e-14
                or self._last_record_mu - mu_min >= self.mu_drop):
            self._record(curr)
        return self.reordered_at is not None

    def _stage_c(self, prev, curr, t, rq):
        """Speed at the stage point: cubic in r, linear in t across the step."""
        j, wts = self.interp.weights(rq)
        if curr.t <= prev.t:
            psi0 = self.interp.apply(prev.psi0, j, wts)
        else:
            w = np.clip((t - prev.t) / (curr.t - prev.t), 0.0, 1.0)
            psi0 = ((1.0 - w) * self.interp.apply(prev.psi0, j, wts)
                    + w * self.interp.apply(curr.psi0, j, wts))
        return _speed_arrays(self.g2, psi0)[2]

    def _G_blend(self, prev, curr, frac, rq):
        if frac <= 0.0:
            return self._sample(prev, rq)[5]
        if frac >= 1.0:
            return self._sample(curr, rq)[5]
        return ((1.0 - frac) * self._sample(prev, rq)[5]
                + frac * self._sample(curr, rq)[5])

    # -- recording ------------------------------------------------------------

    def _record(self, state: FieldState):
        psi0, dpsi, c, lbar_psi0, e, G = self._sample(state, self.r_pos)
        kappa, mu_flow, bad = flowmap_density(self.labels, self.r_pos, c)
        if bad >= 0 and self.reordered_at is None:
            self.reordered_at = (state.t, bad)
        rows = self._rows
        rows["t"].append(state.t)
        rows["r"].append(self.r_pos.copy())
        rows["c"].append(c)
        rows["psi0"].append(psi0)
        rows["dr_psi0"].append(dpsi)
        rows["lbar_psi0"].append(lbar_psi0)
        rows["mu_transport"].append(self.mu.copy())
        rows["G"].append(G)
        rows["e"].append(e)
        rows["mu_flow"].append(mu_flow)
        rows["kappa_flow"].append(kappa)
        self._next_record_t = state.t + self.record_dt
        self._last_record_mu = float(self.mu.min())

    def mu_m(self) -> float:
        """Current minimum density over the fan, clamped at one."""
        return min(float(self.mu.min()), 1.0)

    def finalize(self) -> "CharacteristicFan":
        rows = self._rows
        return CharacteristicFan(
            labels=self.labels.copy(),
            times=np.asarray(rows["t"], dtype=float),
            r=np.vstack(rows["r"]),
            c=np.vstack(rows["c"]),
            psi0=np.vstack(rows["psi0"]),
            dr_psi0=np.vstack(rows["dr_psi0"]),
            lbar_psi0=np.vstack(rows["lbar_psi0"]),
            mu_transport=np.vstack(rows["mu_transport"]),
            G=np.vstack(rows["G"]),
            e=np.vstack(rows["e"]),
            mu_flow=np.vstack(rows["mu_flow"]),
            kappa_flow=np.vstack(rows["kappa_flow"]),
            params=self.params,
            reordered_at=self.reordered_at)


def flowmap_density(labels, r_row, c_row):
    """kappa = dr/du by 4th-order label differences and mu = c * kappa;
    returns (kappa, mu, first_bad_index) where first_bad_index is -1 while
    the positions are strictly increasing."""
    diffs = np.diff(r_row)
    bad = int(np.argmax(diffs <= 0.0)) if np.any(diffs <= 0.0) else -1
    du = labels[1] - labels[0]
    kappa = deriv1(r_row, du, order=4)
    return kappa, c_row * kappa, bad


@dataclass
class CharacteristicFan:
    """Along-track history of the traced fan.

    All 2D arrays are indexed (time, label). dr_psi0 equals That(psi0)
    radially (the unit transversal is exactly d_r); T(psi0) and the
    outgoing derivative L(psi0) are derived using the transport-route
    density, the trusted one near collapse.
    """

    labels: np.ndarray
    times: np.ndarray
    r: np.ndarray
    c: np.ndarray
    psi0: np.ndarray
    dr_psi0: np.ndarray
    lbar_psi0: np.ndarray
    mu_transport: np.ndarray
    G: np.ndarray
    e: np.ndarray
    mu_flow: np.ndarray
    kappa_flow: np.ndarray
    params: ModelParams
    reordered_at: tuple[float, int] | None = None

    @property
    def n_chars(self) -> int:
        return self.labels.size

    @property
    def lbar_mu(self) -> np.ndarray:
        return self.mu_transport * self.G

    @property
    def m_src(self) -> np.ndarray:
        return self.mu_transport * (self.G - self.e)

    @property
    def t_psi0(self) -> np.ndarray:
        """T(psi0) = kappa d_r(psi0) with kappa = mu/c (transport route)."""
        return self.mu_transport / self.c * self.dr_psi0

    @property
    def l_psi0(self) -> np.ndarray:
        """Outgoing derivative L = c^-2 mu Lbar + 2 T applied to psi0."""
        return self.mu_transport / (self.c * self.c) * self.lbar_psi0 \
            + 2.0 * self.t_psi0

    def mu_m_series(self) -> np.ndarray:
        """min over labels of the transport density, clamped at 1."""
        return np.minimum(self.mu_transport.min(axis=1), 1.0)

    def resolved_mask(self, stop_mu: float) -> np.ndarray:
        return self.mu_m_series() > stop_mu


def trace(states, n_chars: int, params: ModelParams,
          max_substep: float = 5e-4) -> CharacteristicFan:
    """Batch tracing over a stored, time-ordered probe-state sequence.

    Each interval is substepped so the position integrator's step never
    exceeds max_substep; accuracy between probes is limited by the linear
    time interpolation of the fields, so the cadence of the input states
    should be validated by halving (the online tracer does not have this
    limit: its cadence is the solver step)."""
    states = list(states)
    if len(states) < 2:
        raise ValueError("need at least two states")
    tracer = FanTracer(states[0], params, n_chars, record_dt=0.0,
                       t_end_hint=states[-1].t)
    for prev, curr in zip(states[:-1], states[1:]):
        n_sub = max(1, int(np.ceil((curr.t - prev.t) / max_substep)))
        tracer.advance(prev, curr, n_substeps=n_sub)
    return tracer.finalize()


def mu_from_flowmap(fan: CharacteristicFan) -> np.ndarray:
    """Recompute the flow-map density for every recorded time; raises
    FanReordered at the first crossing."""
    out = np.empty_like(fan.r)
    for i in range(fan.times.size):
        kappa, mu, bad = flowmap_density(fan.labels, fan.r[i], fan.c[i])
        if bad >= 0:
            raise FanReordered(fan.times[i], bad)
        out[i] = mu
    return out


def mu_from_transport(fan: CharacteristicFan,
                      params: ModelParams) -> np.ndarray:
    """Reintegrate the transport route from the recorded along-track G
    samples (trapezoid in t). The online integration inside FanTracer is
    the reference; this reconstruction exists as an API-level consistency
    surface and agrees with it up to the recording cadence."""
    t = fan.times
    mu = np.empty_like(fan.G)
    mu[0] = fan.mu_transport[0]
    for i in range(1, t.size):
        h = t[i] - t[i - 1]
        mu[i] = mu[i - 1] * np.exp(0.5 * h * (fan.G[i - 1] + fan.G[i]))
    return mu


@dataclass
class ShockDetection:
    """Extrapolated collapse time from the density fit A + B/t."""

    t_star: float
    u_star: float
    extrapolated: bool
    fit_a: float
    fit_b: float
    fit_window: tuple[float, float]
    mu_m_last: float


def detect_shock(fan: CharacteristicFan, stop_mu: float = 0.02,
                 fit_upper: float = 0.5, fit_fraction: float = 0.3,
                 no_shock_band: float = 0.9) -> ShockDetection:
    """Fit mu_m(t) = A + B/t on the tail of the collapse and solve for
    the zero. Raises NoShock when mu_m never leaves the near-unity band."""
    mu_m = fan.mu_m_series()
    t = fan.times
    if float(mu_m.min()) > no_shock_band:
        raise NoShock(f"mu_m stayed above {no_shock_band} "
                      f"(min {mu_m.min():.4f})")

    window = np.flatnonzero((mu_m >= stop_mu) & (mu_m <= fit_upper))
    if window.size < 5:
        window = np.flatnonzero(mu_m <= fit_upper)
    if window.size < 5:
        # collapse has not entered the fit band yet; extrapolate from the
        # decreasing tail of whatever was recorded
        window = np.arange(t.size)
    tail = window[int(np.floor(window.size * (1.0 - fit_fraction))):]
    if tail.size < 3:
        tail = window[-3:]
    x = 1.0 / t[tail]
    y = mu_m[tail]
    b, a = np.polyfit(x, y, 1)
    t_star = -b / a if a != 0 else float("-inf")
    u_star_idx = int(np.argmin(fan.mu_transport[-1]))
    return ShockDetection(
        t_star=float(t_star),
        u_star=float(fan.labels[u_star_idx]),
        extrapolated=bool(t_star > t[-1]),
        fit_a=float(a), fit_b=float(b),
        fit_window=(float(t[tail[0]]), float(t[tail[-1]])),
        mu_m_last=float(mu_m[-1]))


@dataclass
class GeometryDiagnostics:
    """Per-track geometric diagnostic series (time, label)."""

    tr_chibar: np.ndarray
    tr_chibar_prime: np.ndarray
    tr_alpha_bar: np.ndarray
    that_psi0: np.ndarray


def geometry_diagnostics(fan: CharacteristicFan,
                         params: ModelParams) -> GeometryDiagnostics:
    """Radial reductions of the fan's second fundamental form and the
    incoming curvature scalar.

    tr(chibar) = -2c/r on round spheres; its primed version subtracts the
    flat value -2/(u - t). The curvature scalar keeps only its singular
    part mu^-1 m tr(chibar): the remainder involves only angular
    derivatives of rho and vanishes identically in radial runs. The unit
    transversal derivative That(psi0) is exactly the sampled d_r(psi0)."""
    u = fan.labels[None, :]
    t = fan.times[:, None]
    tr_chibar = -2.0 * fan.c / fan.r
    tr_chibar_prime = tr_chibar + 2.0 / (u - t)
    mu_inv_m = fan.G - fan.e  # m / mu, finite through collapse
    tr_alpha_bar = mu_inv_m * tr_chibar
    return GeometryDiagnostics(tr_chibar=tr_chibar,
                               tr_chibar_prime=tr_chibar_prime,
                               tr_alpha_bar=tr_alpha_bar,
                               that_psi0=fan.dr_psi0.copy())
