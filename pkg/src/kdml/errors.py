"""Exception hierarchy shared by the simulator, estimators and learners."""


class KdmlError(Exception):
    """Base class for all package errors."""


class ConfigError(KdmlError, ValueError):
    """Invalid configuration (bad oscillator count, delay beyond the CP, ...)."""


class InputError(KdmlError, ValueError):
    """Malformed input data: wrong length, dimension mismatch, zero pilot."""


class NumericalError(KdmlError, ArithmeticError):
    """Non-finite values, diverging training or a singular linear system."""
