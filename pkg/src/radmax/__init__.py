"""Ball measures, maximal operators and doubling constants for radial measures in R^n."""

__version__ = "0.1.0"

from .density import RadialDensity, constant, dyadic_steps, exp_decay, from_function, power, power_family, shell
from .geometry import (BallSpec, LogMeasure, QuadratureConfig, ball_average, ball_measure, cap_angle,
                       cap_measure, kernel_phi, mc_ball_measure)
from .quadrature import DivergenceError
from .special import log_sphere_surface

__all__ = [
    "RadialDensity", "constant", "dyadic_steps", "exp_decay", "from_function", "power", "power_family",
    "shell", "BallSpec", "LogMeasure", "QuadratureConfig", "ball_average", "ball_measure", "cap_angle",
    "cap_measure", "kernel_phi", "mc_ball_measure", "DivergenceError", "log_sphere_surface",
]
