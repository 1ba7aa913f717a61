"""Construction of no-outgoing-radiation short-pulse Cauchy data.

From a freely chosen seed pair (phi1, phi2) on s in [0, 1] the builder
solves a linear second-order profile ODE for phi0,

    phi0'' + (d/r + d/(2c) c_r - (3d/2) g2 c^2 phi1 phi1') phi0'
           - c^(-1) phi1' = d^2 phi2,     phi0(0) = phi0'(0) = 0,

with d the pulse width, c = c(d^(1/2) phi1) and c_r = -3 c^3 g2 phi1 phi1',
then places

    phi(-r0, r)  = d^(3/2) phi0((r-r0)/d),
    psi0(-r0, r) = d^(1/2) phi1((r-r0)/d)

on the annulus [r0, r0+d], zero inside r0, and a C2 taper to zero just
outside. The construction makes the pulse purely incoming: both Lbar(phi)
and Lbar^2(phi) come out O(d^(3/2)), which check_no_outgoing_radiation
measures on the assembled arrays.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import GridTooCoarse, OdeDivergence
from .numerics import cubic_interp, deriv1, deriv2, quintic_fade

__all__ = ["SeedData", "Phi0Profile", "CauchyData", "make_seed",
           "build_phi0", "assemble", "check_no_outgoing_radiation",
           "check_shock_condition", "SHOCK_THRESHOLD", "PROFILES"]

#: threshold in the pointwise shock condition g2 * phi1 * phi1' <= -1/6
SHOCK_THRESHOLD = -1.0 / 6.0

#: bound K in the small-s admissibility test |phi1(s)| <= K s^2; sized for
#: order-one normalized seeds so linear growth at the origin is rejected
VANISH_K = 50.0


@dataclass
class SeedData:
    """Seed pair sampled on a uniform s grid spanning [0, 1].

    Optional exact evaluators (phi1_fn and friends) are used when present;
    otherwise values between samples come from cubic interpolation and
    derivatives from finite differences. Seeds must vanish to second order
    at s = 0 so the data matches the trivial interior smoothly; behavior
    at s = 1 is free (the assembly taper absorbs a nonzero tail).
    """

    s: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi1_fn: callable = None
    dphi1_fn: callable = None
    d2phi1_fn: callable = None
    phi2_fn: callable = None
    name: str = "custom"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        self.s = s
        self.phi1 = np.asarray(self.phi1, dtype=float)
        self.phi2 = np.asarray(self.phi2, dtype=float)
        if s.size < 16:
            raise ValueError("seed grid too small (need >= 16 samples)")
        if abs(s[0]) > 1e-15 or abs(s[-1] - 1.0) > 1e-15:
            raise ValueError("seed grid must span [0, 1]")
        ds = np.diff(s)
        if not np.allclose(ds, ds[0], rtol=1e-12, atol=1e-15):
            raise ValueError("seed grid must be uniform")
        for name, arr in (("phi1", self.phi1), ("phi2", self.phi2)):
            if arr.size != s.size:
                raise ValueError(f"{name} length mismatch")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} samples must be finite")
        self._check_vanishing()

    def _check_vanishing(self):
        """Enforce |phi(s)| <= K s^2 on the first 5% of the grid."""
        head = self.s <= 0.05
        head[0] = False  # s = 0 itself carries the exact zero
        s2 = self.s[head] ** 2
        for name, arr in (("phi1", self.phi1), ("phi2", self.phi2)):
            if abs(arr[0]) > 0:
                raise ValueError(f"{name}(0) must be exactly 0")
            if np.any(np.abs(arr[head]) > VANISH_K * s2):
                raise ValueError(
                    f"{name} does not vanish to 2nd order at s = 0 "
                    f"(|{name}| > {VANISH_K:g} * s^2 on the first 5%)")

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])

    def phi1_at(self, s):
        if self.phi1_fn is not None:
            return self.phi1_fn(np.asarray(s, dtype=float))
        return cubic_interp(self.s, self.phi1, s)

    def dphi1_at(self, s):
        if self.dphi1_fn is not None:
            return self.dphi1_fn(np.asarray(s, dtype=float))
        return cubic_interp(self.s, deriv1(self.phi1, self.ds, order=4), s)

    def d2phi1_at(self, s):
        if self.d2phi1_fn is not None:
            return self.d2phi1_fn(np.asarray(s, dtype=float))
        return cubic_interp(self.s, deriv2(self.phi1, self.ds, order=4), s)

    def phi2_at(self, s):
        if self.phi2_fn is not None:
            return self.phi2_fn(np.asarray(s, dtype=float))
        return cubic_interp(self.s, self.phi2, s)

    def boundary_class(self, tol: float = 1e-12) -> str:
        """Whether the seed already vanishes at s = 1 ("compact") or the
        taper has to absorb a tail ("boundary")."""
        if abs(self.phi1[-1]) < tol and abs(self.phi2[-1]) < tol:
            return "compact"
        return "boundary"

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.s, self.phi1, self.phi2):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


def _bump(s):
    """Smooth bump exp(4 - 1/(s(1-s))) on (0, 1), peak value 1 at s = 1/2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(4.0 - 1.0 / (si * (1.0 - si)))
    return out


def _dbump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    f = si * (1.0 - si)
    out[inside] = np.exp(4.0 - 1.0 / f) * (1.0 - 2.0 * si) / (f * f)
    return out


def _d2bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    f = si * (1.0 - si)
    g = (1.0 - 2.0 * si) / (f * f)  # (log bump)'
    dg = -2.0 / (f * f) - 2.0 * (1.0 - 2.0 * si) ** 2 / (f ** 3)
    out[inside] = np.exp(4.0 - 1.0 / f) * (g * g + dg)
    return out


def make_seed(profile: str, n_samples: int = 2048, amplitude: float = 1.0,
              phi2_amplitude: float = 0.0) -> SeedData:
    """Build one of the named seed profiles.

    "zero"   trivial seed,
    "bump"   amplitude * exp(4 - 1/(s(1-s))), optional phi2 bump.
    """
    s = np.linspace(0.0, 1.0, n_samples)
    if profile == "zero":
        z = np.zeros_like(s)
        zf = lambda x: np.zeros_like(np.asarray(x, dtype=float))
        return SeedData(s, z, z.copy(), phi1_fn=zf, dphi1_fn=zf,
                        d2phi1_fn=zf, phi2_fn=zf, name="zero")
    if profile == "bump":
        a, b = float(amplitude), float(phi2_amplitude)
        return SeedData(
            s, a * _bump(s), b * _bump(s),
            phi1_fn=lambda x: a * _bump(x),
            dphi1_fn=lambda x: a * _dbump(x),
            d2phi1_fn=lambda x: a * _d2bump(x),
            phi2_fn=lambda x: b * _bump(x),
            name="bump")
    raise ValueError(f"unknown seed profile {profile!r}")


PROFILES = ("zero", "bump")


@dataclass
class Phi0Profile:
    """Solution of the profile ODE on the seed grid, with its derivative
    and the Richardson error estimate of the integration."""

    s: np.ndarray
    phi0: np.ndarray
    dphi0: np.ndarray
    d2phi0: np.ndarray
    err_estimate: float

    def phi0_at(self, s):
        return cubic_interp(self.s, self.phi0, s)

    def dphi0_at(self, s):
        return cubic_interp(self.s, self.dphi0, s)


def _ode_coeffs(seed: SeedData, params: model.ModelParams, s_lattice):
    """Coefficient arrays of the profile ODE on the integration lattice."""
    d = params.delta
    phi1 = seed.phi1_at(s_lattice)
    dphi1 = seed.dphi1_at(s_lattice)
    phi2 = seed.phi2_at(s_lattice)
    c = model.speed(params, np.sqrt(d) * phi1)
    c_r = -3.0 * params.g2 * c ** 3 * phi1 * dphi1
    r = params.r0 + d * s_lattice
    damping = d / r + (d / (2.0 * c)) * c_r \
        - 1.5 * d * params.g2 * c ** 2 * phi1 * dphi1
    forcing = dphi1 / c + d * d * phi2
    return damping, forcing


def _integrate_profile(damping, forcing, h):
    """RK4 with fixed step h for phi0'' = -damping(s) phi0' + forcing(s).

    The coefficient arrays are sampled on the half-step lattice, so all
    four stage abscissae land on lattice nodes.
    """
    n_steps = (damping.size - 1) // 2
    phi0 = np.empty(n_steps + 1)
    v = np.empty(n_steps + 1)
    phi0[0] = 0.0
    v[0] = 0.0
    a, g = damping, forcing
    y, w = 0.0, 0.0
    for k in range(n_steps):
        i = 2 * k
        k1y = w
        k1w = -a[i] * w + g[i]
        k2y = w + 0.5 * h * k1w
        k2w = -a[i + 1] * (w + 0.5 * h * k1w) + g[i + 1]
        k3y = w + 0.5 * h * k2w
        k3w = -a[i + 1] * (w + 0.5 * h * k2w) + g[i + 1]
        k4y = w + h * k3w
        k4w = -a[i + 2] * (w + h * k3w) + g[i + 2]
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        w = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        phi0[k + 1] = y
        v[k + 1] = w
    return phi0, v


def build_phi0(seed: SeedData, params: model.ModelParams,
               tol: float = 1e-8, steps_per_cell: int = 4) -> Phi0Profile:
    """Solve the profile ODE with zero data at s = 0.

    Fixed-step 4-stage integration at h = ds/steps_per_cell plus a
    Richardson estimate from a half-step rerun; raises OdeDivergence when
    the estimate exceeds tol. The returned samples are from the finer run.
    """
    n_cells = (seed.s.size - 1) * steps_per_cell
    results = {}
    for refine in (1, 2):
        m = n_cells * refine
        h = 1.0 / m
        lattice = np.linspace(0.0, 1.0, 2 * m + 1)
        damping, forcing = _ode_coeffs(seed, params, lattice)
        results[refine] = _integrate_profile(damping, forcing, h)
    coarse_phi0 = results[1][0]
    fine_phi0, fine_v = results[2]
    err = float(np.max(np.abs(fine_phi0[::2] - coarse_phi0))) / 15.0
    if err > tol:
        raise OdeDivergence(
            f"profile ODE error estimate {err:.3e} exceeds tol {tol:.1e}")

    stride = 2 * steps_per_cell
    s = seed.s
    phi0 = fine_phi0[::stride].copy()
    dphi0 = fine_v[::stride].copy()
    damping, forcing = _ode_coeffs(seed, params, s)
    d2phi0 = -damping * dphi0 + forcing
    return Phi0Profile(s=s, phi0=phi0, dphi0=dphi0, d2phi0=d2phi0,
                       err_estimate=err)


@dataclass
class CauchyData:
    """Assembled initial slice: phi and psi0 = d_t phi on the radial grid.

    Zero for r <= r0, the short pulse on [r0, r0+delta], a C2 taper to
    zero on taper_window, zero beyond.
    """

    r: np.ndarray
    phi: np.ndarray
    psi0: np.ndarray
    taper_window: tuple[float, float]
    params: model.ModelParams
    seed_name: str = ""
    seed_hash: str = ""
    seed_class: str = ""
    pulse_points: int = field(default=0)

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    def is_trivial(self, tol: float = 0.0) -> bool:
        return (np.max(np.abs(self.phi)) <= tol
                and np.max(np.abs(self.psi0)) <= tol)


def _jet_extension(value, slope, curv, x):
    return value + slope * x + 0.5 * curv * x * x


def assemble(seed: SeedData, phi0: Phi0Profile, params: model.ModelParams,
             r: np.ndarray, taper_width: float | None = None,
             min_pulse_points: int = 32) -> CauchyData:
    """Place the pulse on the radial grid r and taper it outside.

    The taper continues each profile by its 2-jet at s = 1 and multiplies
    by a quintic C2 window over [r0+delta, r0+delta+w]; the window region
    lies outside the domain of dependence of the traced fan, so the choice
    of w cannot influence any verified quantity (asserted in tests by
    comparing two widths).
    """
    r = np.asarray(r, dtype=float)
    d, r0 = params.delta, params.r0
    w = d if taper_width is None else float(taper_width)
    if w <= 0:
        raise ValueError("taper width must be positive")
    if r[-1] < r0 + d + w:
        raise ValueError("grid does not contain the taper window")

    pulse_points = int(np.count_nonzero((r >= r0) & (r < r0 + d)))
    if pulse_points < min_pulse_points:
        raise GridTooCoarse(
            f"only {pulse_points} grid points span the pulse "
            f"[{r0}, {r0 + d}]; need >= {min_pulse_points}")

    s = (r - r0) / d
    phi = np.zeros_like(r)
    psi0 = np.zeros_like(r)

    core = (s >= 0.0) & (s <= 1.0)
    phi[core] = d ** 1.5 * phi0.phi0_at(s[core])
    psi0[core] = d ** 0.5 * seed.phi1_at(s[core])

    sw = w / d  # taper width in s units
    tail = (s > 1.0) & (s < 1.0 + sw)
    if np.any(tail):
        x = s[tail] - 1.0
        fade = quintic_fade(x / sw)
        phi_jet = _jet_extension(phi0.phi0[-1], phi0.dphi0[-1],
                                 phi0.d2phi0[-1], x)
        psi_jet = _jet_extension(
            seed.phi1[-1],
            float(np.atleast_1d(seed.dphi1_at(1.0))[0]),
            float(np.atleast_1d(seed.d2phi1_at(1.0))[0]), x)
        phi[tail] = d ** 1.5 * phi_jet * fade
        psi0[tail] = d ** 0.5 * psi_jet * fade

    # hyperbolicity must hold across the assembled slice
    model.speed(params, psi0)

    return CauchyData(r=r, phi=phi, psi0=psi0,
                      taper_window=(r0 + d, r0 + d + w), params=params,
                      seed_name=seed.name, seed_hash=seed.content_hash(),
                      seed_class=seed.boundary_class(),
                      pulse_points=pulse_points)


@dataclass
class NoRadiationRecord:
    """Sup norms of Lbar(phi) and Lbar^2(phi) over the pulse annulus and
    their ratios to delta^(3/2)."""

    lbar_phi_inf: float
    lbar2_phi_inf: float
    ratio_lbar: float
    ratio_lbar2: float
    delta: float


def check_no_outgoing_radiation(data: CauchyData, params: model.ModelParams,
                                margin_cells: int = 4) -> NoRadiationRecord:
    """Measure the outgoing content of assembled data.

    Lbar(phi) = psi0 - c d_r(phi) directly; Lbar^2(phi) through the
    second-order expansion in which the evolution equation replaces the
    d_t^2 term, evaluated with 4th-order grid derivatives. The sup is
    taken a stencil margin away from the two C2 joints of the pulse: the
    difference stencils straddling a jump in the third derivative produce
    a pure discretization artifact there, not data content. A large value
    is a report, not an error.
    """
    r, phi, psi0 = data.r, data.phi, data.psi0
    dr = data.dr
    g2 = params.g2

    c = model.speed(params, psi0)
    phi_r = deriv1(phi, dr, order=4)
    phi_rr = deriv2(phi, dr, order=4)
    psi0_r = deriv1(psi0, dr, order=4)
    c_r = -3.0 * g2 * psi0 * c ** 3 * psi0_r

    lbar_phi = psi0 - c * phi_r
    cross = 3.0 * g2 * c ** 3 * psi0 * phi_r
    lbar2_phi = ((2.0 - cross) * c ** 2 * phi_rr
                 + (1.0 - cross) * (2.0 * c ** 2 / r) * phi_r
                 + c * c_r * phi_r
                 - 2.0 * c * psi0_r)

    m = margin_cells * data.dr
    pulse = (r >= params.r0 + m) & (r <= params.r0 + params.delta - m)
    n1 = float(np.max(np.abs(lbar_phi[pulse])))
    n2 = float(np.max(np.abs(lbar2_phi[pulse])))
    scale = params.delta ** 1.5
    return NoRadiationRecord(lbar_phi_inf=n1, lbar2_phi_inf=n2,
                             ratio_lbar=n1 / scale, ratio_lbar2=n2 / scale,
                             delta=params.delta)


@dataclass
class ShockConditionRecord:
    met: bool
    min_value: float
    arg_min: float
    threshold: float = SHOCK_THRESHOLD


def check_shock_condition(seed: SeedData,
                          params: model.ModelParams) -> ShockConditionRecord:
    """Minimum over the seed grid of g2 * phi1 * phi1' and whether it
    reaches the -1/6 threshold that forces collapse before t = -1."""
    product = params.g2 * seed.phi1_at(seed.s) * seed.dphi1_at(seed.s)
    k = int(np.argmin(product))
    mn = float(product[k])
    return ShockConditionRecord(met=bool(mn <= SHOCK_THRESHOLD),
                                min_value=mn, arg_min=float(seed.s[k]))
