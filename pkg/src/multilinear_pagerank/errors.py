"""Exception hierarchy for the multilinear PageRank toolkit."""

from pathlib import Path


class MultilinearPageRankError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(MultilinearPageRankError, ValueError):
    """Vector or matrix dimensions do not agree."""


class ParameterError(MultilinearPageRankError, ValueError):
    """A scalar parameter is outside its admissible range."""


class StochasticityError(MultilinearPageRankError, ValueError):
    """A tensor or vector violates nonnegativity or unit column sums."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class DegenerateProjectionError(MultilinearPageRankError, ArithmeticError):
    """The positive part of a vector is identically zero."""


class SingularMatrixError(MultilinearPageRankError, ArithmeticError):
    """An LU pivot vanished to working precision."""


class ZeroResidualError(MultilinearPageRankError):
    """The Krylov starting vector is zero; the system is already solved."""


class ExtrapolationSingularError(MultilinearPageRankError, ArithmeticError):
    """The extrapolation coefficients cannot be normalized."""


class ParseError(MultilinearPageRankError, ValueError):
    """A tensor or edge-list file could not be parsed."""

    def __init__(self, message: str, path: Path | str | None = None, line: int = 0):
        location = f"{path}:{line}: " if path is not None else f"line {line}: "
        super().__init__(location + message)
        self.path = path
        self.line = line
