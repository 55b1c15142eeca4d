"""Detection of a positively skewed alpha-stable signal in symmetric alpha-stable interference."""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DegenerateHypothesesError, IntegrationError,
                     NumericalError, StableDetectError)
from .stable import StableParams, c_alpha, char_fn, combine, pdf, sample

__all__ = [
    "ConfigError", "ConvergenceError", "DegenerateHypothesesError", "IntegrationError",
    "NumericalError", "StableDetectError", "StableParams", "c_alpha", "char_fn", "combine",
    "pdf", "sample",
]
