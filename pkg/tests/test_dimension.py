import math

import numpy as np
import pytest
from scipy.special import gammaln

from radmax import density as dens
from radmax.dimension import (LimitExperiment, approx_identity_certificate, fit_growth, geometric_schedule,
                              limit_table, power_family_experiment, shell_ball_ratio_exact,
                              shell_counterexample)
from radmax.geometry import BallSpec, ball_average, radial_integral


def test_schedule():
    assert geometric_schedule() == (10, 40, 160, 640, 2000)
    assert geometric_schedule(5, 2, 30) == (5, 10, 20, 30)


@pytest.mark.parametrize("n,s,R", [(10, 1.0, 1.0), (200, 3.0, 1.0), (50, 0.5, 2.0)])
def test_certificate_concentrates(n, s, R):
    c = approx_identity_certificate(BallSpec(n, s, R), eps=0.3 * math.hypot(s, R))
    assert c.positivity >= 0
    assert c.mass_error < 1e-9
    assert c.tail <= 1.0


def test_certificate_centered_tail():
    n, R, eps = 40, 1.0, 0.1
    c = approx_identity_certificate(BallSpec(n, 0.0, R), eps)
    assert c.tail_below == pytest.approx(((R - eps) / R) ** n, rel=1e-9)
    assert c.tail_above == 0.0


def test_certificate_tail_shrinks_with_n():
    tails = [approx_identity_certificate(BallSpec(n, 1.0, 1.0), 0.2).tail for n in (10, 100, 1000)]
    assert tails[0] > tails[1] > tails[2]


def test_certificate_rejects_eps():
    with pytest.raises(ValueError):
        approx_identity_certificate(BallSpec(5, 0.0, 1.0), 2.0)


def test_limit_quadratic_error_is_exact():
    rep = limit_table(LimitExperiment(dens.power(2.0), schedule=(10, 100, 1000)))
    for row in rep.rows:
        _, s, R, T, n, avg, tgt, err = row
        assert err == pytest.approx(2 * R ** 2 / (n + 2), rel=1e-8)
    assert rep.passed


def test_limit_constant_density():
    rep = limit_table(LimitExperiment(dens.constant(3.0), schedule=(10, 100)))
    assert max(rep.column("error")) < 1e-12 and rep.passed


def test_limit_shell_off_sphere():
    rep = limit_table(LimitExperiment(dens.shell(0.5), pairs=[(1.0, 1.0), (3.0, 1.0)],
                                      schedule=(10, 160, 2000)))
    assert rep.passed


def test_limit_rejects_singular_target():
    with pytest.raises(ValueError):
        LimitExperiment(dens.shell(0.5), pairs=[(0.0, 1.0)])


def test_shell_exact_ratio_matches_quadrature():
    for n in (5, 80):
        assert ball_average(dens.shell(0.3), BallSpec(n, 0.0, 1.0)) == pytest.approx(
            shell_ball_ratio_exact(n, 0.3), rel=1e-8)


def test_shell_growth_fit():
    res = shell_counterexample(0.5, schedule=(100, 200, 500, 1000, 2000))
    assert abs(res.fit.exponent - 0.5) < 0.02 and res.fit.confident
    assert res.limit_error < 0.01


def test_shell_small_alpha_is_flat():
    res = shell_counterexample(0.01, schedule=(100, 400, 2000))
    assert res.fit.exponent < 0.05


def test_fit_growth_exact_models():
    n = np.array([10, 20, 40, 80])
    f = fit_growth(n, 3 * n ** 0.75, "power", top_half=False)
    assert f.exponent == pytest.approx(0.75) and f.r2 == pytest.approx(1.0)
    f = fit_growth(n, 2 * 1.1 ** n, "exponential", top_half=False)
    assert f.rate == pytest.approx(1.1)
    with pytest.raises(ValueError):
        fit_growth(n, n, "linear")


@pytest.mark.parametrize("alpha,n,s", [(0.3, 10, 1.0), (0.5, 40, 2.0), (0.9, 7, 0.5)])
def test_power_family_closed_form(alpha, n, s):
    log_omega = math.log(2) + n / 2 * math.log(math.pi) - gammaln(n / 2)
    b = n * (1 - alpha)
    expect = log_omega + b * math.log(s) - math.log(b)
    assert radial_integral(dens.power_family(alpha, n), BallSpec(n, 0.0, s)) == pytest.approx(expect, rel=1e-10)


def test_power_family_rejects_alpha():
    with pytest.raises(ValueError):
        dens.power_family(1.0, 10)
    with pytest.raises(ValueError):
        power_family_experiment(1.5)


def test_power_family_experiment_grows():
    fit, rep = power_family_experiment(0.5, schedule=(10, 20, 30, 40))
    assert fit.exponent > 0 and fit.confident and rep.passed
