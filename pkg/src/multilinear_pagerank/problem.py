"""The multilinear PageRank problem x = alpha R(x kron ... kron x) + (1 - alpha) v."""

import logging

import numpy as np

from .config import settings
from .errors import DegenerateProjectionError, ParameterError, StochasticityError
from .models import RegularityReport
from .tensor_ops import (
    FlattenedTensor,
    apply_multilinear,
    check_vector,
    dense_jacobian,
    jacobian_apply,
)

logger = logging.getLogger(__name__)


def is_stochastic(x: np.ndarray, tol: float = 1e-12) -> bool:
    """Entrywise nonnegative with unit sum within ``tol``."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= 0) and abs(x.sum() - 1.0) <= tol)


class PageRankProblem:
    """Tensor, damping factor and teleportation vector; immutable once built."""

    def __init__(
        self,
        tensor: FlattenedTensor,
        alpha: float,
        v: np.ndarray | None = None,
        *,
        validate_tensor: bool = True,
    ):
        if not 0.0 <= alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
        n = tensor.dim
        v = np.full(n, 1.0 / n) if v is None else check_vector(v, n, "v").copy()
        if not is_stochastic(v, settings.column_tol):
            raise StochasticityError(
                f"teleportation vector is not stochastic (sum {v.sum():.15g})"
            )
        if validate_tensor:
            tensor.validate()
        v.setflags(write=False)

        self.tensor = tensor
        self.alpha = float(alpha)
        self.v = v

    @property
    def dim(self) -> int:
        return self.tensor.dim

    @property
    def order(self) -> int:
        return self.tensor.order

    def fixed_point_map(self, x: np.ndarray) -> np.ndarray:
        image = apply_multilinear(self.tensor, x)
        return self.alpha * image + (1 - self.alpha) * self.v

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.fixed_point_map(x) - x

    def jacobian_apply(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        return jacobian_apply(self.tensor, x, w, self.alpha)

    def dense_jacobian(self, x: np.ndarray) -> np.ndarray:
        return dense_jacobian(self.tensor, x, self.alpha)

    def with_alpha(self, alpha: float) -> "PageRankProblem":
        """Same tensor and teleportation, new damping factor."""
        return PageRankProblem(self.tensor, alpha, self.v, validate_tensor=False)

    def __repr__(self) -> str:
        return f"PageRankProblem(m={self.order}, n={self.dim}, alpha={self.alpha})"


def residual(prob: PageRankProblem, x: np.ndarray) -> np.ndarray:
    """f(x) = alpha R(x..x) + (1 - alpha) v - x."""
    return prob.residual(x)


def fixed_point_map(prob: PageRankProblem, x: np.ndarray) -> np.ndarray:
    """g(x) = alpha R(x..x) + (1 - alpha) v."""
    return prob.fixed_point_map(x)


def project(z: np.ndarray) -> np.ndarray:
    """Stochastic projection z+ / ||z+||_1.

    Raises:
        DegenerateProjectionError: when no entry of ``z`` is positive.
    """
    positive = np.maximum(np.asarray(z, dtype=float), 0.0)
    mass = positive.sum()
    if not np.isfinite(mass) or mass <= 0.0:
        raise DegenerateProjectionError("positive part of the iterate is zero")
    return positive / mass


def check_regularity(prob: PageRankProblem) -> RegularityReport:
    """Report whether alpha < 1/(m-1), where the Jacobian is a nonsingular M-matrix."""
    threshold = 1.0 / (prob.order - 1)
    report = RegularityReport(
        order=prob.order,
        alpha=prob.alpha,
        threshold=threshold,
        margin=threshold - prob.alpha,
        regular=prob.alpha < threshold,
        dense_newton_feasible=prob.dim <= settings.dense_jacobian_cap,
    )
    if not report.regular:
        logger.debug(
            f"alpha={prob.alpha} outside the regular regime alpha < {threshold:.4g}"
        )
    return report
