"""Decoupled renewal walks.

Exact (bracketed) evaluation and Monte Carlo simulation of the decoupled
counting process, first-passage times and maxima, hole-probability
asymptotics with their limit constants, and the stationary Gaussian limit
process with its covariance structure.
"""

__version__ = "0.1.0"

from .dist import (  # noqa: E402,F401
    IncrementLaw,
    MittagLefflerLaw,
    SpectrallyNegativeStable,
    SubordinatorMarginal,
    parse_law,
)
from .rng import RandomStream  # noqa: F401
