"""Exception types shared across the package."""


class TandemAoiError(Exception):
    """Base class for all package errors."""


class ParameterError(TandemAoiError, ValueError):
    """Invalid model parameters (non-positive rates, bad shapes, out-of-range inputs)."""


class DegenerateConditioningError(TandemAoiError, ArithmeticError):
    """Conditioning on an event of (numerically) zero probability."""


class ConsistencyError(TandemAoiError, ArithmeticError):
    """A derived quantity left its admissible range; indicates a formula bug, not bad input."""


class NumericalError(TandemAoiError, ArithmeticError):
    """Non-finite values produced during evaluation or accumulation."""


class ConfigurationError(TandemAoiError, ValueError):
    """Inconsistent simulator configuration or exhausted trace input."""
