import math

import numpy as np
import pytest
from scipy import integrate

from radmax import density as dens
from radmax.geometry import (BallSpec, LogMeasure, QuadratureConfig, ball_average, ball_measure, cap_angle,
                             cap_measure, kernel_phi, lebesgue, log_ball_volume, mc_ball_measure,
                             radial_integral)
from radmax.quadrature import DivergenceError
from radmax.special import log_sphere_surface


def test_ballspec_validation():
    with pytest.raises(ValueError):
        BallSpec(1, 0.0, 1.0)
    with pytest.raises(ValueError):
        BallSpec(3, -1.0, 1.0)
    with pytest.raises(ValueError):
        BallSpec(3, 0.0, 0.0)
    assert BallSpec(3, 3.0, 4.0).T == 5.0


def test_cap_angle_examples():
    assert cap_angle(BallSpec(3, 2.0, 1.0), 2.0) == pytest.approx(math.acos(7 / 8), rel=1e-14)
    assert cap_angle(BallSpec(3, 2.0, 1.0), 3.0) == 0.0
    assert cap_angle(BallSpec(3, 1.0, 2.0), 0.5) == math.pi
    with pytest.raises(ValueError):
        cap_angle(BallSpec(3, 0.0, 1.0), 0.5)


def test_cap_full_sphere_and_hemisphere():
    for n in (2, 5, 300):
        assert cap_measure(BallSpec(n, 0.0, 2.0), 1.0).log_value == pytest.approx(log_sphere_surface(n))
        assert cap_measure(BallSpec(n, 0.0, 2.0), 3.0).log_value == -math.inf
        s, R = 0.6, 1.0
        half = cap_measure(BallSpec(n, s, R), math.sqrt(R * R - s * s)).log_value
        assert half == pytest.approx(log_sphere_surface(n) - math.log(2), rel=1e-12)


@pytest.mark.parametrize("s,R", [(2.0, 1.0), (0.5, 1.0), (1.0, 1.0)])
def test_cap_area_n3_closed_form(s, R):
    spec = BallSpec(3, s, R)
    for t in np.linspace(abs(s - R) + 1e-3, s + R - 1e-3, 9):
        exact = 2 * math.pi * (1 - math.cos(cap_angle(spec, t)))
        assert cap_measure(spec, t).value == pytest.approx(exact, rel=1e-12)


def test_kernel_support_and_centered_law():
    spec = BallSpec(7, 2.0, 1.0)
    assert kernel_phi(spec, 0.5) == 0.0 and kernel_phi(spec, 3.5) == 0.0
    c = BallSpec(7, 0.0, 2.0)
    t = np.linspace(0.1, 1.9, 7)
    np.testing.assert_allclose(kernel_phi(c, t), 7 * t ** 6 / 2 ** 7, rtol=1e-13)


def test_kernel_unit_mass_n50():
    spec = BallSpec(50, 1.0, 1.0)
    val, _ = integrate.quad(lambda t: kernel_phi(spec, t), 0.0, 2.0, points=[spec.T], limit=200,
                            epsabs=0, epsrel=1e-12)
    assert val == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 10, 100, 1000])
@pytest.mark.parametrize("R", [0.1, 1.0, 10.0])
def test_lebesgue_volume(n, R):
    exact = log_ball_volume(n, R)
    for s in (0.0, R / 2, R, 3 * R):
        lm = ball_measure(lebesgue(), BallSpec(n, s, R)).log_value
        assert abs(math.expm1(lm - exact)) < 1e-9


@pytest.mark.parametrize("alpha", [-0.5, 0.5, 2.0])
@pytest.mark.parametrize("n", [3, 40, 800])
def test_centered_power_moment(alpha, n):
    R = 1.7
    exact = log_sphere_surface(n) + (n + alpha) * math.log(R) - math.log(n + alpha)
    assert ball_measure(dens.power(alpha), BallSpec(n, 0.0, R)).log_value == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("n", [2, 10, 100, 2000])
@pytest.mark.parametrize("s,R", [(0.0, 1.0), (1.0, 1.0), (3.0, 0.5), (0.2, 4.0)])
def test_second_moment_identity(n, s, R):
    assert ball_average(dens.power(2.0), BallSpec(n, s, R)) == pytest.approx(s * s + n * R * R / (n + 2),
                                                                             rel=1e-9)


def test_constant_average():
    assert ball_average(dens.constant(3.5), BallSpec(40, 2.0, 1.0)) == pytest.approx(3.5, rel=1e-10)


def test_monotone_in_radius():
    w = dens.shell(0.5)
    vals = [ball_measure(w, BallSpec(20, 0.7, R)).log_value for R in np.linspace(0.1, 3.0, 25)]
    assert np.all(np.diff(vals) > 0)


def test_shell_mc_duel_n4():
    w = dens.shell(0.5)
    spec = BallSpec(4, 0.5, 1.0)
    est, se = mc_ball_measure(w, spec, QuadratureConfig(mc_samples=400_000, seed=3))
    assert abs(ball_measure(w, spec).value - est) < 3 * se


def test_shell_mc_duel_n5():
    w = dens.shell(0.5)
    spec = BallSpec(5, 1.0, 1.0)
    est, se = mc_ball_measure(w, spec, QuadratureConfig(mc_samples=400_000, seed=4))
    assert abs(ball_measure(w, spec).value - est) < 3 * se


def test_mc_lebesgue_and_power():
    est, se = mc_ball_measure(lebesgue(), BallSpec(3, 0.4, 1.3), QuadratureConfig(seed=1))
    assert se == 0.0 and est == pytest.approx(math.exp(log_ball_volume(3, 1.3)), rel=1e-12)
    est, se = mc_ball_measure(dens.power(1.0), BallSpec(3, 0.0, 1.3), QuadratureConfig(seed=2))
    assert abs(est - 4 * math.pi * 1.3 ** 4 / 4) < 3 * se


def test_mc_is_deterministic_and_bounded():
    q = QuadratureConfig(seed=9)
    a = mc_ball_measure(dens.shell(0.5), BallSpec(3, 0.5, 1.0), q)
    assert a == mc_ball_measure(dens.shell(0.5), BallSpec(3, 0.5, 1.0), q)
    with pytest.raises(ValueError):
        mc_ball_measure(lebesgue(), BallSpec(11, 0.0, 1.0))


def test_divergence_reported():
    with pytest.raises(DivergenceError):
        radial_integral(dens.power(-3.0), BallSpec(2, 0.0, 1.0))


def test_logmeasure_arithmetic_beyond_float_range():
    a = LogMeasure(2000.0)
    b = LogMeasure(1999.0)
    assert (a / b).value == pytest.approx(math.e)
    assert (a + b).log_value == pytest.approx(2000 + math.log1p(math.exp(-1)))
    assert a.value == math.inf
    assert (a * LogMeasure(-2000.0)).value == 1.0
    with pytest.raises(ValueError):
        LogMeasure.of(-1.0)
