"""Model parameters and constitutive formulas built on the wave speed.

The evolving scalar enters all geometry through rho = (d_t phi)^2 and the
wave speed c(rho) = (1 + 3*g2*rho)^(-1/2), where g2 is the quadratic
coefficient of the perturbed Lagrangian. Everything downstream (transport
sources m and e, curvature scalars) is a pure function of these.

All functions are vectorized over numpy arrays and raise HyperbolicityLoss
when 1 + 3*g2*rho falls below the configured floor anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HyperbolicityLoss

__all__ = ["ModelParams", "radicand", "speed", "dc2_drho", "source_m",
           "source_e"]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of a run.

    g2 is dimensionless and may take any real value; g2 = 0 selects the
    linear wave equation. delta is the pulse width, r0 the radius of the
    sphere the pulse sits on at the initial time t = -r0.
    """

    g2: float
    delta: float
    r0: float = 2.0
    hyperbolicity_floor: float = 0.01

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not self.hyperbolicity_floor > 0:
            raise ValueError("hyperbolicity_floor must be positive, got "
                             f"{self.hyperbolicity_floor}")


def radicand(params: ModelParams, rho):
    """The factor 1 + 3*g2*rho whose positivity keeps the equation hyperbolic."""
    return 1.0 + 3.0 * params.g2 * np.asarray(rho, dtype=float)


def _guarded_radicand(params: ModelParams, rho, where: str):
    q = radicand(params, rho)
    qmin = np.min(q)
    if qmin < params.hyperbolicity_floor:
        raise HyperbolicityLoss(qmin, params.hyperbolicity_floor, where)
    return q


def speed(params: ModelParams, psi0):
    """Wave speed c = (1 + 3*g2*psi0^2)^(-1/2); strictly positive."""
    psi0 = np.asarray(psi0, dtype=float)
    q = _guarded_radicand(params, psi0 * psi0, "speed")
    return q ** -0.5


def dc2_drho(params: ModelParams, rho):
    """Derivative of the squared speed: d(c^2)/drho = -3*g2 / (1+3*g2*rho)^2."""
    q = _guarded_radicand(params, rho, "dc2_drho")
    return -3.0 * params.g2 / (q * q)


def source_m(params: ModelParams, psi0, t_rho):
    """Transversal source m = -(1/2) * d(c^2)/drho * T(rho).

    With T(rho) = 2*psi0*T(psi0) this reduces to 3*g2*c^4*psi0*T(psi0);
    it is the term that drives the inverse foliation density to zero.
    """
    psi0 = np.asarray(psi0, dtype=float)
    return -0.5 * dc2_drho(params, psi0 * psi0) * np.asarray(t_rho, dtype=float)


def source_e(params: ModelParams, psi0, lbar_rho):
    """Incoming-null source e = (1/(2c^2)) * d(c^2)/drho * Lbar(rho)."""
    psi0 = np.asarray(psi0, dtype=float)
    rho = psi0 * psi0
    q = _guarded_radicand(params, rho, "source_e")  # q = 1/c^2
    return 0.5 * q * dc2_drho(params, rho) * np.asarray(lbar_rho, dtype=float)
