"""Shared numerical kernels: uniform-grid stencils, cubic interpolation,
a classical 4-stage Runge-Kutta step, and log-log slope fitting.

Everything here assumes uniform grids; callers own that invariant.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "deriv1", "deriv2", "cubic_interp", "CubicInterpolator",
    "quintic_fade", "rk4_step", "loglog_slope", "trapz",
]


def deriv1(f: np.ndarray, dx: float, order: int = 4) -> np.ndarray:
    """First derivative of samples on a uniform grid.

    Centered stencil of the requested order in the interior, one-sided
    stencils of matching order at the edges.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    out = np.empty_like(f)
    if order == 2:
        if n < 3:
            raise ValueError("need at least 3 samples")
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
        out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
        return out
    if order == 4:
        if n < 6:
            raise ValueError("need at least 6 samples")
        out[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * dx)
        # 4th-order one-sided / skewed stencils for the two points per edge
        out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3]
                  - 3.0 * f[4]) / (12.0 * dx)
        out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3]
                  + f[4]) / (12.0 * dx)
        out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4]
                   - f[-5]) / (12.0 * dx)
        out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4]
                   + 3.0 * f[-5]) / (12.0 * dx)
        return out
    raise ValueError(f"unsupported stencil order {order}")


def deriv2(f: np.ndarray, dx: float, order: int = 4) -> np.ndarray:
    """Second derivative of samples on a uniform grid, edges one-sided."""
    f = np.asarray(f, dtype=float)
    n = f.size
    out = np.empty_like(f)
    h2 = dx * dx
    if order == 2:
        if n < 4:
            raise ValueError("need at least 4 samples")
        out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
        return out
    if order == 4:
        if n < 7:
            raise ValueError("need at least 7 samples")
        out[2:-2] = (-(f[4:] + f[:-4]) + 16.0 * (f[3:-1] + f[1:-3])
                     - 30.0 * f[2:-2]) / (12.0 * h2)
        out[0] = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3]
                  + 61.0 * f[4] - 10.0 * f[5]) / (12.0 * h2)
        out[1] = (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3]
                  - 6.0 * f[4] + f[5]) / (12.0 * h2)
        out[-2] = (10.0 * f[-1] - 15.0 * f[-2] - 4.0 * f[-3] + 14.0 * f[-4]
                   - 6.0 * f[-5] + f[-6]) / (12.0 * h2)
        out[-1] = (45.0 * f[-1] - 154.0 * f[-2] + 214.0 * f[-3] - 156.0 * f[-4]
                   + 61.0 * f[-5] - 10.0 * f[-6]) / (12.0 * h2)
        return out
    raise ValueError(f"unsupported stencil order {order}")


class CubicInterpolator:
    """Piecewise-cubic Lagrange interpolation on a uniform grid.

    Evaluates one or more sample arrays that share the same grid at a
    common set of query points; the 4-point stencil is recomputed per
    call so the instance itself is stateless and cheap.
    """

    def __init__(self, x0: float, dx: float, n: int):
        self.x0 = float(x0)
        self.dx = float(dx)
        self.n = int(n)

    def weights(self, x: np.ndarray):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pos = (x - self.x0) / self.dx
        j = np.clip(np.floor(pos).astype(np.int64), 1, self.n - 3)
        xi = pos - j
        # Lagrange basis on nodes {-1, 0, 1, 2} in units of dx
        w0 = -xi * (xi - 1.0) * (xi - 2.0) / 6.0
        w1 = (xi + 1.0) * (xi - 1.0) * (xi - 2.0) / 2.0
        w2 = -(xi + 1.0) * xi * (xi - 2.0) / 2.0
        w3 = (xi + 1.0) * xi * (xi - 1.0) / 6.0
        return j, (w0, w1, w2, w3)

    def apply(self, f: np.ndarray, j, w) -> np.ndarray:
        w0, w1, w2, w3 = w
        return (w0 * f[j - 1] + w1 * f[j] + w2 * f[j + 1] + w3 * f[j + 2])

    def __call__(self, f: np.ndarray, x: np.ndarray) -> np.ndarray:
        j, w = self.weights(x)
        return self.apply(f, j, w)


def cubic_interp(xgrid: np.ndarray, f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Convenience wrapper: cubic interpolation given the grid array itself."""
    xgrid = np.asarray(xgrid, dtype=float)
    interp = CubicInterpolator(xgrid[0], xgrid[1] - xgrid[0], xgrid.size)
    return interp(np.asarray(f, dtype=float), x)


def quintic_fade(x: np.ndarray) -> np.ndarray:
    """Quintic fade from 1 at x<=0 to 0 at x>=1 with zero first and second
    derivatives at both ends (C2 window)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 1.0 - x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


def rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical 4-stage Runge-Kutta step for y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def loglog_slope(x, y):
    """Least-squares slope of log(y) against log(x).

    Returns (slope, ok); ok is False when fewer than two strictly positive
    pairs survive, in which case slope is nan.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if mask.sum() < 2:
        return float("nan"), False
    lx, ly = np.log(x[mask]), np.log(y[mask])
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope), True


def trapz(y: np.ndarray, x: np.ndarray) -> float:
    """Trapezoid rule; thin wrapper to keep one spelling across numpy versions."""
    return float(np.trapz(np.asarray(y, dtype=float), np.asarray(x, dtype=float)))
