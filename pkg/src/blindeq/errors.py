"""Exception types raised by the toolkit."""


class BlindEqError(Exception):
    """Base class for all package errors."""


class DimensionError(BlindEqError, ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefiniteError(BlindEqError, ValueError):
    """Cholesky factorization failed on a matrix expected to be Hermitian PD."""


class DegenerateDelayError(BlindEqError, ValueError):
    """The requested equalization delay carries no usable signal path."""


class AlphabetError(BlindEqError, ValueError):
    """Constellation violates the zero-mean / circular / sub-Gaussian requirements."""


class GainDomainError(BlindEqError, ValueError):
    """Output power estimate is outside the domain of the blind gain formula."""


class DivergenceError(BlindEqError, RuntimeError):
    """Adaptive tap vector blew up or became non-finite."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(BlindEqError, ValueError):
    """Experiment configuration failed validation.

    ``problems`` lists one ``(field, message)`` pair per violated field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"{field}: {msg}" for field, msg in self.problems)
        super().__init__(f"invalid configuration: {lines}")
