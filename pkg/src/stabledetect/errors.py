class StableDetectError(Exception):
    """Base class for package errors."""


class ConfigError(StableDetectError, ValueError):
    """Invalid experiment configuration."""


class NumericalError(StableDetectError, ArithmeticError):
    """A numerical routine could not deliver the requested accuracy."""


class IntegrationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class DegenerateHypothesesError(NumericalError):
    """The two hypotheses induce identical statistics; no decision boundary exists."""
