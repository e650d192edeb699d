import math

import numpy as np
import pytest

from radmax.quadrature import DivergenceError, log_integrate


def test_smooth_integral():
    res = log_integrate(lambda t: -t, 0.0, 3.0)
    assert math.exp(res.log_value) == pytest.approx(1 - math.exp(-3), rel=1e-12)


def test_interior_singularity():
    res = log_integrate(lambda t: -0.5 * np.log(np.abs(1 - t)), 0.0, 2.0, singular=[1.0])
    assert math.exp(res.log_value) == pytest.approx(4.0, rel=1e-10)


def test_strong_endpoint_singularity():
    res = log_integrate(lambda t: -0.9 * np.log(t), 0.0, 1.0, singular=[0.0])
    assert math.exp(res.log_value) == pytest.approx(10.0, rel=1e-10)


def test_huge_log_scale():
    # t^5000 on [0, 2]: 2^5001 / 5001, far outside float range
    res = log_integrate(lambda t: 5000 * np.log(t), 0.0, 2.0)
    exact = 5001 * math.log(2) - math.log(5001)
    assert res.log_value == pytest.approx(exact, rel=1e-12)


def test_divergence_flagged():
    with pytest.raises(DivergenceError):
        log_integrate(lambda t: -np.log(t), 0.0, 1.0, singular=[0.0])
