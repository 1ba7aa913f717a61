import numpy as np
import pytest

from qlwshock.burgers import (BurgersProblem, mu_track, run_burgers,
                              shock_time, trace_characteristics)
from qlwshock.errors import DegenerateDensity


def test_constant_profile_never_crosses():
    prob = BurgersProblem.from_callable(lambda x: np.full_like(x, 0.5),
                                        (0.0, 1.0), 101)
    lines = trace_characteristics(prob, t_end=5.0, n_chars=11)
    assert np.allclose(lines.u, 0.5)
    report = shock_time(prob)
    assert not report.has_shock
    assert report.t_star_numeric is None
    with pytest.raises(DegenerateDensity):
        mu_track(prob, 0.5, 0.0)


def test_linear_profile_focuses_at_origin():
    prob = BurgersProblem.from_callable(lambda x: -x, (-1.0, 1.0), 201)
    lines = trace_characteristics(prob, t_end=1.0, n_chars=5)
    # tracks from +-0.5 meet x = 0 at t = 1
    at_one = lines.x0 + lines.u * 1.0
    assert np.max(np.abs(at_one)) < 1e-12
    mu = mu_track(prob, 0.3, np.array([0.0, 0.5, 1.0]))
    assert np.allclose(mu, [1.0, 0.5, 0.0], atol=1e-10)
    report = shock_time(prob)
    assert report.t_star_analytic == pytest.approx(1.0, abs=1e-10)
    assert report.t_star_numeric == pytest.approx(1.0, abs=1e-9)


def test_increasing_profile_has_no_collapse():
    prob = BurgersProblem.from_callable(lambda x: np.tanh(x), (-2.0, 2.0), 401)
    mu = mu_track(prob, 0.0, np.array([0.0, 1.0, 10.0]))
    assert mu[0] < 0.0
    assert np.all(mu < 0.0)  # never crosses zero forward in time


def test_sine_profile_shock():
    prob = BurgersProblem.from_callable(np.sin, (0.0, 2.0 * np.pi), 10_000)
    report = shock_time(prob)
    assert report.t_star_analytic == pytest.approx(1.0, rel=1e-6)
    assert report.t_star_numeric == pytest.approx(1.0, rel=0.01)
    # first collision happens between neighbors straddling x = pi
    lo, hi = report.crossing_pair
    assert lo < np.pi < hi + 0.01

    mu = mu_track(prob, np.pi, np.linspace(0.0, 2.0, 9))
    # affine with slope exactly -1; intercept 1 up to the FD tolerance
    slopes = np.diff(mu) / np.diff(np.linspace(0.0, 2.0, 9))
    assert np.max(np.abs(slopes + 1.0)) < 1e-12
    assert mu[0] == pytest.approx(1.0, abs=1e-6)


def test_mu_tracks_affine_slope_minus_one():
    prob = BurgersProblem.from_callable(np.sin, (0.0, 2.0 * np.pi), 2_000)
    report = run_burgers(prob, t_end=1.5, n_chars=64, n_times=33)
    times = report.lines.times
    mu = report.mu_tracks
    ok = np.isfinite(mu[0])
    slopes = (mu[-1, ok] - mu[0, ok]) / (times[-1] - times[0])
    assert np.max(np.abs(slopes + 1.0)) < 1e-12


def test_u_constant_along_tracks():
    prob = BurgersProblem.from_callable(np.sin, (0.0, 2.0 * np.pi), 1_000)
    lines = trace_characteristics(prob, t_end=0.9, n_chars=32)
    # positions move at the constant track speed: exact affine transport
    reconstructed = (lines.positions[-1] - lines.positions[0]) / 0.9
    assert np.max(np.abs(reconstructed - lines.u)) < 1e-13


def test_crossing_time_first_order_in_fan_spacing():
    prob = BurgersProblem.from_callable(np.sin, (0.0, 2.0 * np.pi), 20_000)
    errs = []
    for n in (250, 500, 1000, 2000):
        rep = shock_time(prob, n_chars=n)
        errs.append(abs(rep.t_star_numeric - 1.0))
    # at least first-order decay under fan refinement
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert max(rates) >= 1.0
    assert errs[-1] < errs[0]


def test_problem_validation():
    with pytest.raises(ValueError):
        BurgersProblem(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        BurgersProblem(np.array([0.0, 0.5, 2.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        BurgersProblem(np.linspace(0, 1, 5), np.array([1, 2, np.nan, 4, 5.0]))
