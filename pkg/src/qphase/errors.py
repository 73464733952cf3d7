"""Exception types raised across the package.

The CLI maps these onto exit codes: domain errors exit 1, I/O and parse
errors exit 2, numerical divergence exits 3.
"""


class QPhaseError(Exception):
    """Base class for all package errors."""


class DomainError(QPhaseError, ValueError):
    """A parameter lies outside the domain of the requested operation."""


class DimensionError(DomainError):
    """Array shapes are inconsistent with each other."""


class SparsityError(DomainError):
    pass


class SupportError(DomainError):
    """A point lies outside the prior support ``||theta|| <= h1``."""


class EmptyChainError(DomainError):
    pass


class DivergenceError(QPhaseError, ArithmeticError):
    """An iterative method produced a non-finite state."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class PGMParseError(QPhaseError, OSError):
    """Malformed or truncated PGM file."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
