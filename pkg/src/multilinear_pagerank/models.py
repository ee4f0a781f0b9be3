"""Data models for the multilinear PageRank toolkit."""

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import settings


class Method(str, Enum):
    """Outer solver identifiers, as accepted by the CLI."""

    FIXED_POINT = "fp"
    NEWTON = "newton"
    NEWTON_GMRES = "ng"
    NEWTON_GMRES_FD = "ngfd"
    NG_MPE = "ng-mpe"
    NG_RRE = "ng-rre"
    NEWTON_ANDERSON = "na"


class SolveStatus(str, Enum):
    """Termination status of an outer solve."""

    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    STAGNATED = "stagnated"
    DEGENERATE_PROJECTION = "degenerate_projection"
    SINGULAR_JACOBIAN = "singular_jacobian"


class StorageKind(str, Enum):
    """Storage of a flattened tensor."""

    DENSE = "dense"
    SPARSE = "sparse"


class ExtrapolationMethod(str, Enum):
    """Polynomial vector extrapolation variants."""

    MPE = "mpe"
    RRE = "rre"


class SolverOptions(BaseModel):
    """Tolerances, caps and method parameters shared by every solver."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    outer_tol: float = Field(default_factory=lambda: settings.outer_tol, gt=0)
    inner_tol: float = Field(default_factory=lambda: settings.inner_tol, gt=0)
    max_outer: int = Field(default_factory=lambda: settings.max_outer, ge=1)
    krylov_dim: int = Field(default_factory=lambda: settings.krylov_dim, ge=1)
    window: int = Field(default_factory=lambda: settings.window, ge=1)
    stagnation_window: int = Field(
        default_factory=lambda: settings.stagnation_window, ge=1
    )
    fd_enabled: bool = Field(False, description="Use finite-difference JVPs")
    anderson_depth: int = Field(1, ge=1, le=1, description="Only t = 1 exists")
    reorthogonalize: bool = Field(False, description="Second Gram-Schmidt pass")
    forcing: bool = Field(False, description="Relative inner tolerance")
    forcing_eta: float = Field(0.1, gt=0)
    forcing_max: float = Field(0.5, gt=0, lt=1)
    record_iterates: bool = Field(False, description="Keep projected iterates")
    x0: np.ndarray | None = Field(None, description="Start vector, default v")

    @field_validator("x0", mode="before")
    @classmethod
    def _as_float_array(cls, value: Any) -> np.ndarray | None:
        if value is None:
            return None
        return np.asarray(value, dtype=float).copy()


class SolveReport(BaseModel):
    """Outcome of one outer solve."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    solution: np.ndarray
    status: SolveStatus
    outer_iterations: int = Field(..., ge=0)
    residual_history: list[float] = Field(
        ..., description="||f(x_k)||_1 for k = 0..outer_iterations"
    )
    step_history: list[float] = Field(
        default_factory=list,
        description="||x_{k+1} - x_k||_1 for k = 0..outer_iterations-1",
    )
    inner_iteration_counts: list[int] = Field(default_factory=list)
    inner_steps_total: int = Field(0, description="Newton(-GMRES) linear solves")
    extrapolation_fallbacks: int = Field(0, ge=0)
    wall_time: float = Field(..., ge=0, description="Seconds spent in the solver")
    method_name: str
    iterates: list[np.ndarray] = Field(default_factory=list)

    @model_validator(mode="after")
    def _history_matches_iterations(self) -> "SolveReport":
        if len(self.residual_history) != self.outer_iterations + 1:
            raise ValueError(
                f"residual_history has {len(self.residual_history)} entries, "
                f"expected {self.outer_iterations + 1}"
            )
        return self

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def to_summary(
        self,
        problem: str = "",
        alpha: float | None = None,
        n: int | None = None,
        m: int | None = None,
        emit_solution: bool = False,
    ) -> dict[str, Any]:
        """JSON-ready report with the fixed field names of the CLI schema."""
        summary: dict[str, Any] = {
            "method": self.method_name,
            "status": self.status.value,
            "outer_iterations": self.outer_iterations,
            "inner_iterations_total": int(sum(self.inner_iteration_counts)),
            "wall_time_s": self.wall_time,
            "final_residual_l1": self.final_residual,
            "alpha": alpha,
            "problem": problem,
            "n": n if n is not None else int(self.solution.shape[0]),
            "m": m,
        }
        if emit_solution:
            summary["solution"] = self.solution.tolist()
        return summary


class RegularityReport(BaseModel):
    """Advisory diagnostic for the non-singular Jacobian regime alpha < 1/(m-1)."""

    order: int
    alpha: float
    threshold: float = Field(..., description="1/(m-1)")
    margin: float = Field(..., description="threshold - alpha")
    regular: bool
    dense_newton_feasible: bool


class DirectedGraph(BaseModel):
    """Unweighted directed graph with 1-based node ids."""

    n: int = Field(..., ge=1, description="Node count")
    edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_edges(self) -> "DirectedGraph":
        for src, dst in self.edges:
            if not (1 <= src <= self.n and 1 <= dst <= self.n):
                raise ValueError(f"edge ({src}, {dst}) outside 1..{self.n}")
        # Deduplicate, keeping first occurrence order
        self.edges = list(dict.fromkeys(self.edges))
        return self

    @property
    def edge_count(self) -> int:
        return len(self.edges)


class BenchmarkRow(BaseModel):
    """One (problem, alpha, method) cell of a benchmark sweep."""

    problem: str
    alpha: float
    method: str
    status: str
    iters: int
    inner_iters: int
    time_s: float
    final_residual: float

    @property
    def solved(self) -> bool:
        return self.status == SolveStatus.CONVERGED.value


class ProfilePoint(BaseModel):
    """A point (tau, rho(tau)) of a performance profile."""

    tau: float = Field(..., ge=1)
    fraction: float = Field(..., ge=0, le=1)


class PerformanceProfile(BaseModel):
    """Dolan-More profile of one method for one metric."""

    method: str
    metric: str
    solve_rate: float = Field(..., ge=0, le=1)
    points: list[ProfilePoint] = Field(default_factory=list)
