import numpy as np
import pytest

from qlwshock.errors import HyperbolicityLoss
from qlwshock.model import ModelParams, dc2_drho, source_e, source_m, speed


@pytest.fixture
def params():
    return ModelParams(g2=1.0, delta=0.05)


def test_speed_at_zero_field(params):
    assert speed(params, 0.0) == 1.0


def test_speed_linear_equation():
    p = ModelParams(g2=0.0, delta=0.05)
    assert speed(p, 0.7) == 1.0
    assert np.all(speed(p, np.linspace(-3, 3, 11)) == 1.0)


def test_speed_closed_form(params):
    # (1 + 3*0.1)^(-1/2)
    assert speed(params, np.sqrt(0.1)) == pytest.approx(1.3 ** -0.5, abs=1e-15)
    assert speed(params, np.sqrt(0.1)) == pytest.approx(0.8770580193070292,
                                                        abs=1e-12)


def test_dc2_drho_values(params):
    assert dc2_drho(params, 0.0) == pytest.approx(-3.0, abs=1e-15)
    assert dc2_drho(params, 0.1) == pytest.approx(-3.0 / 1.69, abs=1e-12)
    p0 = ModelParams(g2=0.0, delta=0.05)
    assert dc2_drho(p0, 0.5) == 0.0


def test_source_m_values(params):
    assert source_m(params, 0.0, 0.0) == 0.0
    p0 = ModelParams(g2=0.0, delta=0.05)
    assert source_m(p0, 0.3, -0.2) == 0.0
    # psi0 = 0.1, T(psi0) = -0.5 so T(rho) = -0.1; m = -(1/2) dc2 * T(rho)
    expect = -0.5 * (-3.0 / 1.03 ** 2) * (-0.1)
    assert source_m(params, 0.1, -0.1) == pytest.approx(expect, abs=1e-14)
    assert expect == pytest.approx(-0.141389386, abs=1e-9)
    # equivalent closed form 3 g2 c^4 psi0 T(psi0)
    c4 = speed(params, 0.1) ** 4
    assert source_m(params, 0.1, -0.1) == pytest.approx(
        3.0 * c4 * 0.1 * (-0.5), rel=1e-12)


def test_source_e_values(params):
    assert source_e(params, 0.0, 0.0) == 0.0
    p0 = ModelParams(g2=0.0, delta=0.05)
    assert source_e(p0, 0.5, 0.1) == 0.0
    # e = (1/(2 c^2)) dc2 * Lbar(rho) = -(3/2) g2 c^2 Lbar(rho)
    expect = 0.5 * 1.03 * (-3.0 / 1.03 ** 2) * 0.02
    assert source_e(params, 0.1, 0.02) == pytest.approx(expect, abs=1e-14)
    assert expect == pytest.approx(-0.029126214, abs=1e-9)


def test_speed_even_and_monotone(params):
    x = np.linspace(0.0, 0.5, 64)
    c_pos = speed(params, x)
    c_neg = speed(params, -x)
    assert np.array_equal(c_pos, c_neg)
    assert np.all(np.diff(c_pos) < 0)  # decreasing in |psi0| for g2 > 0


def test_dc2_identity(params):
    rho = np.linspace(0.0, 2.0, 101)
    lhs = dc2_drho(params, rho) * (1.0 + 3.0 * params.g2 * rho) ** 2
    assert np.max(np.abs(lhs + 3.0 * params.g2)) < 1e-12


def test_hyperbolicity_guard():
    p = ModelParams(g2=-1.0, delta=0.05)
    with pytest.raises(HyperbolicityLoss):
        speed(p, 0.6)  # radicand 1 - 3*0.36 < floor
    with pytest.raises(HyperbolicityLoss):
        dc2_drho(p, 0.4)
    # just above the floor is fine
    assert speed(p, 0.57) > 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(g2=1.0, delta=0.0)
    with pytest.raises(ValueError):
        ModelParams(g2=1.0, delta=0.1, r0=-1.0)
    with pytest.raises(ValueError):
        ModelParams(g2=1.0, delta=0.1, hyperbolicity_floor=0.0)
