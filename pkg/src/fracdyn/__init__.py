"""Fractional-order dynamical systems toolkit.

Caputo-derivative solvers, Mittag-Leffler functions, Lyapunov spectra,
fractal dimension estimation and eigenvalue stability tests, with a small
catalog of benchmark chaotic systems.
"""

from .errors import (
    CellOverflowError,
    ConfigError,
    DegenerateFitError,
    DivergenceError,
    FracdynError,
    IncommensurableOrdersError,
    NonConvergenceError,
)
from .mlf import ml_one, ml_two

__version__ = "0.1.0"

__all__ = [
    "CellOverflowError",
    "ConfigError",
    "DegenerateFitError",
    "DivergenceError",
    "FracdynError",
    "IncommensurableOrdersError",
    "NonConvergenceError",
    "ml_one",
    "ml_two",
    "__version__",
]
