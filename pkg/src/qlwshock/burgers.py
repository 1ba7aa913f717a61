"""Exact characteristic machinery for the inviscid Burgers equation
u_t + u u_x = 0.

Characteristics are straight lines x(t) = x0 + u0(x0) t carrying constant
u; the inverse density mu = -1/(d_x u) obeys mu' = -1 along each line, so
mu(t) = -1/u0'(x0) - t exactly. Shock time is t* = -1/min(u0'). This gives
the shock-detection pipeline an oracle whose every quantity is closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDensity
from .numerics import cubic_interp, deriv1

__all__ = ["BurgersProblem", "BurgersReport", "trace_characteristics",
           "mu_track", "shock_time", "run_burgers"]

#: slopes below this magnitude count as degenerate (mu undefined)
SLOPE_TOL = 1e-10


@dataclass(frozen=True)
class BurgersProblem:
    """Initial profile u0 sampled on a uniform x grid."""

    x: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u0 = np.asarray(self.u0, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u0", u0)
        if x.size < 3:
            raise ValueError("need at least 3 samples")
        if x.size != u0.size:
            raise ValueError("x and u0 must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u0))):
            raise ValueError("samples must be finite")
        dx = np.diff(x)
        if not np.allclose(dx, dx[0], rtol=1e-12, atol=1e-14):
            raise ValueError("x grid must be uniform")

    @classmethod
    def from_callable(cls, fn, x_range, n_samples):
        x = np.linspace(x_range[0], x_range[1], n_samples)
        return cls(x, fn(x))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def slope(self) -> np.ndarray:
        """u0' on the sample grid: centered 2nd order, ends one-sided."""
        return deriv1(self.u0, self.dx, order=2)

    def slope_at(self, x0) -> np.ndarray:
        return cubic_interp(self.x, self.slope(), np.asarray(x0, dtype=float))

    def u_at(self, x0) -> np.ndarray:
        return cubic_interp(self.x, self.u0, np.asarray(x0, dtype=float))


@dataclass
class CharacteristicLines:
    """A fan of exactly affine tracks x(t) = x0 + u0(x0) t."""

    x0: np.ndarray
    u: np.ndarray
    times: np.ndarray
    positions: np.ndarray  # (n_times, n_chars)

    def position_at(self, t) -> np.ndarray:
        return self.x0 + self.u * float(t)


@dataclass
class BurgersReport:
    t_star_analytic: float | None
    t_star_numeric: float | None
    crossing_pair: tuple[float, float] | None
    mu_tracks: np.ndarray = field(default=None)  # (n_times, n_chars), NaN where degenerate
    lines: CharacteristicLines = field(default=None)

    @property
    def has_shock(self) -> bool:
        return self.t_star_analytic is not None


def trace_characteristics(problem: BurgersProblem, t_end: float,
                          n_chars: int, n_times: int = 101) -> CharacteristicLines:
    """Trace n_chars characteristics from labels spread over the x grid."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    x0 = np.linspace(problem.x[0], problem.x[-1], n_chars)
    u = problem.u_at(x0)
    times = np.linspace(0.0, t_end, n_times)
    positions = x0[None, :] + times[:, None] * u[None, :]
    return CharacteristicLines(x0=x0, u=u, times=times, positions=positions)


def mu_track(problem: BurgersProblem, x0: float, t) -> np.ndarray:
    """Inverse density mu(t) = -1/u0'(x0) - t along one characteristic."""
    s = float(np.atleast_1d(problem.slope_at(x0))[0])
    if abs(s) < SLOPE_TOL:
        raise DegenerateDensity(
            f"u0'({x0:.6g}) = {s:.3g} within tolerance; "
            "mu undefined (no collapse on this track)")
    return -1.0 / s - np.asarray(t, dtype=float)


def _first_adjacent_crossing(x0, u, t_hi):
    """Earliest time in (0, t_hi] at which adjacent affine tracks coincide.

    Exact for affine tracks: a closing pair's gap is affine in t, so once
    a pair has crossed it stays crossed and bisection on "any adjacent gap
    <= 0" converges to the first crossing.
    """
    gap0 = np.diff(x0)
    rate = np.diff(u)  # gap(t) = gap0 + rate * t

    def violated(t):
        return np.any(gap0 + rate * t <= 0.0)

    if not violated(t_hi):
        return None, None
    lo, hi = 0.0, t_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if violated(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-14 * max(1.0, t_hi):
            break
    pair = int(np.argmin(gap0 + rate * hi))
    return hi, pair


def shock_time(problem: BurgersProblem, n_chars: int | None = None,
               scan_factor: float = 4.0) -> BurgersReport:
    """Analytic shock time plus the first numeric characteristic crossing.

    Returns a no-shock report (both times None) when u0' is nowhere
    negative.
    """
    slopes = problem.slope()
    s_min = float(slopes.min())
    if s_min >= -SLOPE_TOL:
        return BurgersReport(t_star_analytic=None, t_star_numeric=None,
                             crossing_pair=None)
    t_star = -1.0 / s_min

    if n_chars is None:
        n_chars = problem.x.size
    x0 = np.linspace(problem.x[0], problem.x[-1], n_chars)
    u = problem.u_at(x0)
    t_num, pair = _first_adjacent_crossing(x0, u, scan_factor * t_star)
    crossing = (float(x0[pair]), float(x0[pair + 1])) if pair is not None else None
    return BurgersReport(t_star_analytic=t_star, t_star_numeric=t_num,
                         crossing_pair=crossing)


def run_burgers(problem: BurgersProblem, t_end: float, n_chars: int,
                n_times: int = 101) -> BurgersReport:
    """Full oracle run: trace a fan, attach mu tracks, detect the shock."""
    report = shock_time(problem, n_chars=n_chars)
    lines = trace_characteristics(problem, t_end, n_chars, n_times)
    mu = np.full((lines.times.size, n_chars), np.nan)
    for k, x0 in enumerate(lines.x0):
        try:
            mu[:, k] = mu_track(problem, float(x0), lines.times)
        except DegenerateDensity:
            pass  # no collapse on this track; leave NaN
    report.mu_tracks = mu
    report.lines = lines
    return report
