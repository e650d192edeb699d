import math

import mpmath as mp
import numpy as np
import pytest

from radmax.special import log_betainc, log_sine_power_integral, log_sphere_surface

mp.mp.dps = 40


def test_sphere_surface_small_dims():
    assert log_sphere_surface(2) == pytest.approx(math.log(2 * math.pi), rel=1e-14)
    assert log_sphere_surface(3) == pytest.approx(math.log(4 * math.pi), rel=1e-14)


@pytest.mark.parametrize("n", [1, 7, 50, 1000, 123457])
def test_sphere_surface_matches_mpmath(n):
    exact = mp.log(2) + mp.mpf(n) / 2 * mp.log(mp.pi) - mp.loggamma(mp.mpf(n) / 2)
    assert log_sphere_surface(n) == pytest.approx(float(exact), rel=1e-12, abs=1e-12)


def test_sphere_surface_rejects_n0():
    with pytest.raises(ValueError):
        log_sphere_surface(0)


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (4.5, 0.5, 0.9), (999.5, 0.5, 0.999),
                                   (999.5, 0.5, 0.2), (50.0, 0.5, 0.97), (1.0, 0.5, 1e-8)])
def test_log_betainc_vs_mpmath(a, b, x):
    exact = mp.log(mp.betainc(a, b, 0, x, regularized=True))
    assert float(log_betainc(a, b, x)) == pytest.approx(float(exact), rel=1e-11, abs=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 8, 98, 1998])
@pytest.mark.parametrize("alpha", [0.1, 1.0, math.pi / 2, 2.0, 3.0])
def test_sine_power_integral_vs_mpmath(m, alpha):
    a = mp.mpf(m + 1) / 2
    half = mp.beta(a, 0.5) / 2
    x = mp.sin(alpha) ** 2
    part = half * mp.betainc(a, 0.5, 0, x, regularized=True)
    exact = mp.log(part if alpha <= mp.pi / 2 else 2 * half - part)
    assert float(log_sine_power_integral(m, alpha)) == pytest.approx(float(exact), rel=1e-10, abs=1e-11)


@pytest.mark.parametrize("m", [0, 3, 40])
def test_sine_power_integral_vs_quadrature_small_m(m):
    for alpha in (0.3, 1.2, 2.5):
        exact = mp.log(mp.quad(lambda b: mp.sin(b) ** m, mp.linspace(0, alpha, 8)))
        assert float(log_sine_power_integral(m, alpha)) == pytest.approx(float(exact), rel=1e-11)


def test_near_right_angle_uses_cosine():
    # alpha = pi/2 - 1e-9: the integral for m = 0 is alpha itself
    alpha = math.pi / 2 - 1e-9
    assert float(np.exp(log_sine_power_integral(0, alpha))) == pytest.approx(alpha, rel=1e-14)
