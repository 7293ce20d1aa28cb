"""Law of Brownian motion conditioned on a minimal-length excursion below a level.

The package evaluates the excursion-conditioned density along three
independent routes and cross-checks them:

* closed-form convolution layer sums (``excursion``),
* numerical contour inversion of the Laplace-transform quotients (``laplace``),
* Monte Carlo path simulation with an explicit achievement-time clock (``mcsim``).
"""

from .errors import DomainError, NonConvergenceError, SpecMismatchError
from .excursion import ExcursionSpec, achievement_cdf, density

__all__ = [
    "DomainError",
    "NonConvergenceError",
    "SpecMismatchError",
    "ExcursionSpec",
    "density",
    "achievement_cdf",
]

__version__ = "0.1.0"
