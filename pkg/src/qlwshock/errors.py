"""Typed failure modes shared across the package.

Each error class marks a distinct way a run can leave its contract:
loss of hyperbolicity, degenerate foliation data, integrator failure,
or an expected terminal state of a shock run (gradient blowup).
"""


class QlwError(Exception):
    """Base class for all package errors."""


class HyperbolicityLoss(QlwError):
    """The factor 1 + 3*g2*rho dropped below the configured floor.

    The equation is no longer of wave type at the offending point, so
    every constitutive formula built on the wave speed is invalid there.
    """

    def __init__(self, radicand, floor, where=""):
        self.radicand = float(radicand)
        self.floor = float(floor)
        msg = f"1 + 3*g2*rho = {radicand:.6g} fell below floor {floor:.6g}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class DegenerateDensity(QlwError):
    """Initial profile slope vanishes: the inverse density is undefined."""


class OdeDivergence(QlwError):
    """Fixed-step ODE integration exceeded its error tolerance."""


class GridTooCoarse(QlwError):
    """Fewer grid points than required span the short-pulse annulus."""


class BlowupDetected(QlwError):
    """Field gradient exceeded the divergence guard.

    For a shock run this is an expected terminal state; the last valid
    time is attached so callers can report it.
    """

    def __init__(self, t_last, max_grad):
        self.t_last = float(t_last)
        self.max_grad = float(max_grad)
        super().__init__(f"gradient guard tripped at t = {t_last:.6g} "
                         f"(|d_r psi0| > {max_grad:.6g})")


class LeftDomain(QlwError):
    """A traced characteristic exited the radial computational domain."""


class FanReordered(QlwError):
    """Adjacent characteristics crossed: the fan is no longer a graph over
    its labels. Terminal; reported as shock formation."""

    def __init__(self, t, label_index):
        self.t = float(t)
        self.label_index = int(label_index)
        super().__init__(f"characteristic tracks reordered at t = {t:.6g} "
                         f"near label index {label_index}")


class NoShock(QlwError):
    """The inverse foliation density never left the near-unity band."""


class InsufficientCollapse(QlwError):
    """The run did not collapse far enough for blowup-law fitting."""


class ConfigInvalid(QlwError):
    """Run configuration failed validation; message carries the field."""
