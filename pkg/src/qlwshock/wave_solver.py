"""Method-of-lines evolution of the radial quasilinear wave equation.

The second-order equation is evolved as the first-order system

    d_t phi  = psi0
    d_t psi0 = c(psi0)^2 * (d_r^2 phi + (2/r) d_r phi)

with centered stencils in r (order 2 or 4) and a classical 4-stage
Runge-Kutta step whose size is recomputed from the CFL condition every
step. psi0 is a state variable rather than a derived difference because
the wave speed depends on it pointwise.

Both ends are held at zero: the incoming pulse never reaches r_in and its
outgoing remnant never reaches r_out over the run window, which the
finite-propagation test asserts; a band of guard cells at each end stays
exactly zero so all interior stencils are centered. A run terminates at
t_end, on an observer request (the characteristics module watching the
foliation density), or with BlowupDetected once gradients exceed the
divergence guard; the last is the expected end of a shock run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_builder import CauchyData
from .errors import BlowupDetected, HyperbolicityLoss
from .model import ModelParams
from .numerics import deriv1, deriv2

__all__ = ["SolverConfig", "FieldState", "TerminationRecord", "EvolveResult",
           "RadialWaveSolver", "radial_grid", "step", "evolve",
           "linear_energy"]

#: guard cells pinned to zero at each end (Dirichlet data never reaches them)
NGUARD = 3


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs of the radial solver."""

    cfl: float = 0.4
    stencil_order: int = 4
    r_in: float = 0.25
    r_out: float = 4.0
    cells_per_delta: int = 320
    t_end: float = -1.0
    stop_mu: float = 0.02
    max_grad: float | None = None  # None: auto 2*amp/dr divergence guard

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.stencil_order not in (2, 4):
            raise ValueError("stencil_order must be 2 or 4")
        if not self.r_in > 0:
            raise ValueError("r_in must be positive")
        if not self.r_out > self.r_in:
            raise ValueError("r_out must exceed r_in")


def radial_grid(config: SolverConfig, params: ModelParams) -> np.ndarray:
    """Uniform radial grid with spacing delta / cells_per_delta."""
    dr = params.delta / config.cells_per_delta
    n = int(round((config.r_out - config.r_in) / dr)) + 1
    return np.linspace(config.r_in, config.r_out, n)


@dataclass
class FieldState:
    """Solution snapshot at a fixed time, with cached radial derivatives.

    dr_phi, dr_psi0 and lap_phi are consistent with phi/psi0 under the
    solver stencil; they are what the characteristic tracer samples.
    """

    t: float
    r: np.ndarray
    phi: np.ndarray
    psi0: np.ndarray
    dr_phi: np.ndarray = field(default=None, repr=False)
    dr_psi0: np.ndarray = field(default=None, repr=False)
    lap_phi: np.ndarray = field(default=None, repr=False)
    stencil_order: int = 4

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    def ensure_derived(self):
        if self.dr_phi is None:
            self.dr_phi = deriv1(self.phi, self.dr, self.stencil_order)
        if self.dr_psi0 is None:
            self.dr_psi0 = deriv1(self.psi0, self.dr, self.stencil_order)
        if self.lap_phi is None:
            d2 = deriv2(self.phi, self.dr, self.stencil_order)
            self.lap_phi = d2 + 2.0 * self.dr_phi / self.r
        return self

    def copy(self) -> "FieldState":
        self.ensure_derived()
        return FieldState(t=self.t, r=self.r, phi=self.phi.copy(),
                          psi0=self.psi0.copy(), dr_phi=self.dr_phi.copy(),
                          dr_psi0=self.dr_psi0.copy(),
                          lap_phi=self.lap_phi.copy(),
                          stencil_order=self.stencil_order)


@dataclass
class TerminationRecord:
    reason: str            # "t_end" | "blowup" | "observer"
    t_final: float
    steps: int
    detail: str = ""


@dataclass
class EvolveResult:
    states: list
    termination: TerminationRecord


def _blend(a: FieldState, b: FieldState, t: float) -> FieldState:
    """Linear-in-t interpolation between two consecutive states."""
    w = (t - a.t) / (b.t - a.t) if b.t > a.t else 1.0
    mix = lambda u, v: (1.0 - w) * u + w * v
    return FieldState(t=t, r=a.r, phi=mix(a.phi, b.phi),
                      psi0=mix(a.psi0, b.psi0),
                      dr_phi=mix(a.dr_phi, b.dr_phi),
                      dr_psi0=mix(a.dr_psi0, b.dr_psi0),
                      lap_phi=mix(a.lap_phi, b.lap_phi),
                      stencil_order=a.stencil_order)


class RadialWaveSolver:
    """Stepper holding the grid, preallocated stage buffers, and guards."""

    def __init__(self, data: CauchyData, config: SolverConfig,
                 params: ModelParams, t0: float | None = None):
        self.config = config
        self.params = params
        self.r = np.asarray(data.r, dtype=float)
        self.dr = float(self.r[1] - self.r[0])
        self.n = self.r.size
        if self.n < 2 * NGUARD + 7:
            raise ValueError("grid too small for the stencil")
        self.t = float(-params.r0 if t0 is None else t0)
        self.phi = np.asarray(data.phi, dtype=float).copy()
        self.psi0 = np.asarray(data.psi0, dtype=float).copy()
        self.steps = 0

        amp = float(np.max(np.abs(self.psi0)))
        if config.max_grad is not None:
            self.max_grad = float(config.max_grad)
        elif amp > 0.0:
            self.max_grad = 2.0 * amp / self.dr
        else:
            self.max_grad = np.inf

        g, n = NGUARD, self.n
        self._ii = slice(g, n - g)
        self._inv_r = 1.0 / self.r[self._ii]
        self._kphi = [np.zeros(n) for _ in range(4)]
        self._kpsi = [np.zeros(n) for _ in range(4)]
        self._phi_s = np.zeros(n)
        self._psi_s = np.zeros(n)
        self._d1 = np.zeros(n - 2 * g)
        self._lap = np.zeros(n - 2 * g)
        self._q = np.zeros(n - 2 * g)
        self._bundles = [self._empty_state(), self._empty_state()]

    def _empty_state(self) -> FieldState:
        n = self.n
        return FieldState(t=self.t, r=self.r, phi=np.zeros(n),
                          psi0=np.zeros(n), dr_phi=np.zeros(n),
                          dr_psi0=np.zeros(n), lap_phi=np.zeros(n),
                          stencil_order=self.config.stencil_order)

    # -- interior stencils (guards are exact zeros of the solution) --------

    def _d1_interior(self, f: np.ndarray, out: np.ndarray):
        g, n, dr = NGUARD, self.n, self.dr
        if self.config.stencil_order == 4:
            np.subtract(f[g + 1:n - g + 1], f[g - 1:n - g - 1], out=out)
            out *= 8.0
            out -= f[g + 2:n - g + 2]
            out += f[g - 2:n - g - 2]
            out /= 12.0 * dr
        else:
            np.subtract(f[g + 1:n - g + 1], f[g - 1:n - g - 1], out=out)
            out /= 2.0 * dr

    def _lap_interior(self, f: np.ndarray) -> np.ndarray:
        """d_r^2 f + (2/r) d_r f over the interior into a shared buffer."""
        g, n, dr = NGUARD, self.n, self.dr
        lap, d1 = self._lap, self._d1
        self._d1_interior(f, d1)
        if self.config.stencil_order == 4:
            np.add(f[g + 1:n - g + 1], f[g - 1:n - g - 1], out=lap)
            lap *= 16.0
            lap -= f[g + 2:n - g + 2]
            lap -= f[g - 2:n - g - 2]
            lap -= 30.0 * f[g:n - g]
            lap /= 12.0 * dr * dr
        else:
            np.add(f[g + 1:n - g + 1], f[g - 1:n - g - 1], out=lap)
            lap -= 2.0 * f[g:n - g]
            lap /= dr * dr
        d1 *= self._inv_r
        d1 *= 2.0
        lap += d1
        return lap

    def _rhs(self, phi, psi0, kphi, kpsi):
        ii = self._ii
        np.copyto(kphi, psi0)
        lap = self._lap_interior(phi)
        pin = psi0[ii]
        q = self._q
        np.multiply(pin, pin, out=q)
        q *= 3.0 * self.params.g2
        q += 1.0
        qmin = q.min()
        if qmin < self.params.hyperbolicity_floor:
            raise HyperbolicityLoss(qmin, self.params.hyperbolicity_floor,
                                    f"t = {self.t:.6g}")
        kpsi[:NGUARD] = 0.0
        kpsi[self.n - NGUARD:] = 0.0
        np.divide(lap, q, out=kpsi[ii])

    # -- stepping -----------------------------------------------------------

    def cfl_dt(self) -> float:
        if self.params.g2 >= 0.0:
            c_max = 1.0  # speed is largest where psi0 vanishes
        else:
            psi_max = float(np.max(np.abs(self.psi0)))
            q = 1.0 + 3.0 * self.params.g2 * psi_max * psi_max
            c_max = q ** -0.5 if q > 0 else 1e12
        return self.config.cfl * self.dr / c_max

    def advance(self, dt: float):
        """One 4-stage step of size dt (no guard check; see fill_state)."""
        kphi, kpsi = self._kphi, self._kpsi
        phi, psi0 = self.phi, self.psi0
        phi_s, psi_s = self._phi_s, self._psi_s

        self._rhs(phi, psi0, kphi[0], kpsi[0])
        for stage, frac in ((1, 0.5), (2, 0.5), (3, 1.0)):
            np.multiply(kphi[stage - 1], frac * dt, out=phi_s)
            phi_s += phi
            np.multiply(kpsi[stage - 1], frac * dt, out=psi_s)
            psi_s += psi0
            self._rhs(phi_s, psi_s, kphi[stage], kpsi[stage])

        for y, k in ((phi, kphi), (psi0, kpsi)):
            acc = k[1]
            acc += k[2]
            acc *= 2.0
            acc += k[0]
            acc += k[3]
            acc *= dt / 6.0
            y += acc
        self.t += dt
        self.steps += 1

    def fill_state(self, which: int) -> FieldState:
        """Refresh one of the two reusable state bundles from the current
        solution and run the gradient guard. The returned object's arrays
        are overwritten two calls later; copy() to keep a snapshot."""
        st = self._bundles[which]
        st.t = self.t
        np.copyto(st.phi, self.phi)
        np.copyto(st.psi0, self.psi0)
        ii = self._ii
        self._d1_interior(self.phi, self._d1)
        np.copyto(st.dr_phi[ii], self._d1)
        np.copyto(st.lap_phi[ii], self._lap_interior(self.phi))
        self._d1_interior(self.psi0, self._d1)
        np.copyto(st.dr_psi0[ii], self._d1)
        grad = float(np.max(np.abs(self._d1)))
        if not np.isfinite(grad) or grad > self.max_grad:
            raise BlowupDetected(self.t, self.max_grad)
        return st

    def state(self) -> FieldState:
        return self.fill_state(0).copy()


def step(state: FieldState, config: SolverConfig,
         params: ModelParams) -> FieldState:
    """Single-step convenience API: one CFL-limited stage-4 step."""
    data = CauchyData(r=state.r, phi=state.phi, psi0=state.psi0,
                      taper_window=(0.0, 0.0), params=params)
    solver = RadialWaveSolver(data, config, params, t0=state.t)
    dt = solver.cfl_dt()
    solver.advance(dt)
    try:
        return solver.fill_state(0).copy()
    except BlowupDetected:
        raise BlowupDetected(state.t, solver.max_grad) from None


def evolve(data: CauchyData, config: SolverConfig, params: ModelParams,
           probes, observer=None) -> EvolveResult:
    """Evolve from the initial slice to t_end, emitting states at probe
    times (linear in t between steps).

    observer, when given, is called after every accepted step with the
    previous and current FieldState (reusable views, valid only during the
    call); returning True ends the run with reason "observer". The
    characteristic tracer uses this hook both to advance itself and to
    stop the run near foliation collapse.
    """
    probes = sorted(float(p) for p in probes)
    t0 = -params.r0
    if probes and (probes[0] < t0 - 1e-12 or probes[-1] > config.t_end + 1e-12):
        raise ValueError("probe times must lie within [t0, t_end]")

    solver = RadialWaveSolver(data, config, params)
    states: list[FieldState] = []
    pending = list(probes)

    prev = solver.fill_state(0)
    if pending and abs(pending[0] - t0) < 1e-12:
        states.append(prev.copy())
        pending.pop(0)

    reason, detail = "t_end", ""
    which = 1
    while solver.t < config.t_end - 1e-14:
        dt = min(solver.cfl_dt(), config.t_end - solver.t)
        try:
            solver.advance(dt)
            curr = solver.fill_state(which)
        except BlowupDetected as exc:
            reason, detail = "blowup", str(exc)
            break
        while pending and pending[0] <= curr.t + 1e-14:
            states.append(_blend(prev, curr, min(pending.pop(0), curr.t)))
        if observer is not None and observer(prev, curr):
            reason, detail = "observer", "observer requested stop"
            prev = curr
            break
        prev = curr
        which ^= 1

    term = TerminationRecord(reason=reason, t_final=prev.t,
                             steps=solver.steps, detail=detail)
    return EvolveResult(states=states, termination=term)


def linear_energy(state: FieldState) -> float:
    """Euclidean energy integral (psi0^2 + (d_r phi)^2) r^2 dr; conserved
    by the linear equation up to discretization."""
    state.ensure_derived()
    integrand = (state.psi0 ** 2 + state.dr_phi ** 2) * state.r ** 2
    return float(np.trapz(integrand, state.r))
