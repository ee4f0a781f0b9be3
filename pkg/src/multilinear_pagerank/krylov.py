"""Arnoldi process, GMRES and a dense LU solve over abstract linear operators."""

import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg.blas import drotg

from .errors import ShapeError, SingularMatrixError, ZeroResidualError

logger = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14
UNIT_ROUNDOFF = np.finfo(float).eps / 2


@dataclass(frozen=True)
class LinearOperator:
    """A square operator known only through its action on vectors."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.apply(w)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "LinearOperator":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"operator matrix must be square, got {matrix.shape}")
        return cls(matrix.shape[0], lambda w: matrix @ w)


def fd_step(x: np.ndarray, direction: np.ndarray) -> float:
    """Balanced first-order difference step sqrt(u) (1 + ||x||) / ||direction||."""
    scale = np.sqrt(UNIT_ROUNDOFF) * (1.0 + np.linalg.norm(x))
    return scale / np.linalg.norm(direction)


def finite_difference_operator(
    f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, fx: np.ndarray
) -> LinearOperator:
    """Approximate ``J_f(x) w`` by ``(f(x + sigma w) - f(x)) / sigma``."""

    def apply(w: np.ndarray) -> np.ndarray:
        if not np.any(w):
            return np.zeros_like(fx)
        sigma = fd_step(x, w)
        return (f(x + sigma * w) - fx) / sigma

    return LinearOperator(x.shape[0], apply)


@dataclass
class KrylovWorkspace:
    """Orthonormal Krylov basis (one vector per row) and its Hessenberg matrix.

    Without breakdown ``basis`` has ``k + 1`` rows and ``hessenberg`` is
    ``(k + 1) x k``; after a breakdown both are truncated to ``k`` so that
    ``A V_k = V_k H_k``.
    """

    basis: np.ndarray
    hessenberg: np.ndarray
    beta: float
    breakdown: bool = False

    @property
    def steps(self) -> int:
        return self.hessenberg.shape[1]


class ArnoldiProcess:
    """Incremental modified Gram-Schmidt Arnoldi process."""

    def __init__(
        self,
        op: LinearOperator,
        r0: np.ndarray,
        max_steps: int,
        reorthogonalize: bool = False,
        breakdown_tol: float = BREAKDOWN_TOL,
    ):
        if max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {max_steps}")
        r0 = np.asarray(r0, dtype=float)
        if r0.shape != (op.dim,):
            raise ShapeError(f"start vector has shape {r0.shape}, expected ({op.dim},)")
        self.beta = float(np.linalg.norm(r0))
        if self.beta == 0.0:
            raise ZeroResidualError("Arnoldi start vector is zero")

        self.op = op
        self.max_steps = max_steps
        self.reorthogonalize = reorthogonalize
        self.breakdown_tol = breakdown_tol
        self.V = np.zeros((max_steps + 1, op.dim))
        self.H = np.zeros((max_steps + 1, max_steps))
        self.V[0] = r0 / self.beta
        self.steps = 0
        self.breakdown = False

    def advance(self) -> None:
        """Carry out one Arnoldi step."""
        if self.breakdown or self.steps >= self.max_steps:
            raise RuntimeError("Arnoldi process cannot advance further")
        j = self.steps
        w = np.array(self.op(self.V[j]), dtype=float)
        w_norm = np.linalg.norm(w)

        for _ in range(2 if self.reorthogonalize else 1):
            for i in range(j + 1):
                h = self.V[i] @ w
                self.H[i, j] += h
                w -= h * self.V[i]

        h_next = np.linalg.norm(w)
        self.H[j + 1, j] = h_next
        self.steps += 1
        if h_next <= self.breakdown_tol * max(self.beta, w_norm):
            # Lucky breakdown: K_j is invariant
            self.breakdown = True
        else:
            self.V[j + 1] = w / h_next

    def workspace(self) -> KrylovWorkspace:
        k = self.steps
        if self.breakdown:
            return KrylovWorkspace(
                self.V[:k].copy(), self.H[:k, :k].copy(), self.beta, True
            )
        return KrylovWorkspace(
            self.V[: k + 1].copy(), self.H[: k + 1, :k].copy(), self.beta, False
        )


def arnoldi(
    op: LinearOperator, r0: np.ndarray, p: int, reorthogonalize: bool = False
) -> KrylovWorkspace:
    """Build up to ``p`` Arnoldi steps from ``r0``, stopping at breakdown.

    Raises:
        ZeroResidualError: ``r0`` is zero.
    """
    process = ArnoldiProcess(op, r0, p, reorthogonalize)
    while process.steps < p and not process.breakdown:
        process.advance()
    return process.workspace()


@dataclass
class GmresResult:
    solution: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    residual_history: list[float] = field(default_factory=list)


def _upper_solve(upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.solve_triangular(upper, rhs, lower=False)
    except scipy.linalg.LinAlgError:
        # Singular Hessenberg factor: fall back to the minimum-norm solution
        return np.linalg.lstsq(upper, rhs, rcond=None)[0]


def gmres(
    op: LinearOperator,
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-14,
    p: int = 40,
    *,
    reorthogonalize: bool = False,
    residual_check: Callable[[np.ndarray], float] | None = None,
) -> GmresResult:
    """Unrestarted GMRES with an incrementally Givens-rotated Hessenberg matrix.

    Stops at the first step whose residual estimate is ``<= tol`` or after
    ``p`` steps. When ``residual_check`` is given, it is evaluated on every
    candidate solution and replaces the Givens estimate in the stopping test.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.dim,):
        raise ShapeError(f"rhs has shape {rhs.shape}, expected ({op.dim},)")
    if x0 is None:
        x0 = np.zeros(op.dim)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != rhs.shape:
        raise ShapeError(f"x0 has shape {x0.shape}, expected {rhs.shape}")

    r0 = rhs - op(x0) if np.any(x0) else rhs.copy()
    beta = float(np.linalg.norm(r0))
    if beta == 0.0:
        return GmresResult(x0.copy(), 0.0, 0, True, [0.0])

    process = ArnoldiProcess(op, r0, p, reorthogonalize)
    upper = np.zeros((p + 1, p))
    g = np.zeros(p + 1)
    g[0] = beta
    cosines = np.zeros(p)
    sines = np.zeros(p)
    history = [beta]

    def candidate(k: int) -> np.ndarray:
        y = _upper_solve(upper[:k, :k], g[:k])
        return x0 + process.V[:k].T @ y

    rho = beta
    k = 0
    for j in range(p):
        process.advance()
        column = process.H[: j + 2, j].copy()
        for i in range(j):
            top = cosines[i] * column[i] + sines[i] * column[i + 1]
            column[i + 1] = -sines[i] * column[i] + cosines[i] * column[i + 1]
            column[i] = top
        c, s = drotg(column[j], column[j + 1])
        cosines[j], sines[j] = c, s
        column[j] = c * column[j] + s * column[j + 1]
        column[j + 1] = 0.0
        upper[: j + 2, j] = column
        g[j + 1] = -s * g[j]
        g[j] = c * g[j]

        k = j + 1
        rho = abs(g[k])
        if residual_check is not None:
            rho = float(residual_check(candidate(k)))
        history.append(rho)
        logger.debug(f"GMRES step {k}: residual {rho:.3e}")
        if rho <= tol or process.breakdown:
            break

    return GmresResult(candidate(k), rho, k, rho <= tol, history)


def dense_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises:
        ShapeError: ``A`` not square or ``b`` of the wrong length.
        SingularMatrixError: a pivot vanishes to working precision.
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape != (n, n):
        raise ShapeError(f"matrix must be square, got {matrix.shape}")
    if rhs.shape != (n,):
        raise ShapeError(f"rhs has shape {rhs.shape}, expected ({n},)")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix)
    pivots = np.abs(np.diag(lu))
    floor = n * np.finfo(float).eps * max(np.abs(matrix).max(), np.finfo(float).tiny)
    if pivots.min() <= floor:
        raise SingularMatrixError(
            f"pivot {pivots.min():.3e} below {floor:.3e}; matrix is singular"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs)
