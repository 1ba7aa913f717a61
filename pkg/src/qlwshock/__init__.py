"""Simulation and verification suite for shock formation in the
radially reduced quasilinear wave equation

    -(1 + 3 g2 (d_t phi)^2) d_t^2 phi + Laplace(phi) = 0.

The package builds incoming short-pulse Cauchy data, evolves the radial
equation, traces the incoming characteristic fan, computes the inverse
foliation density by two independent routes, and checks the quantitative
collapse laws against measured convergence rates.
"""

__version__ = "0.1.0"
