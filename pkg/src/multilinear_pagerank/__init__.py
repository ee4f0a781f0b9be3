"""Multilinear PageRank - Newton-Krylov solvers for higher-order PageRank."""

__version__ = "0.1.0"

from .models import Method, SolveReport, SolveStatus, SolverOptions  # noqa: E402
from .problem import PageRankProblem  # noqa: E402
from .solvers import solve  # noqa: E402
from .tensor_ops import FlattenedTensor  # noqa: E402

__all__ = [
    "FlattenedTensor",
    "Method",
    "PageRankProblem",
    "SolveReport",
    "SolveStatus",
    "SolverOptions",
    "__version__",
    "solve",
]
