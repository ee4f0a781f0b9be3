"""Outer solvers for multilinear PageRank.

Every solver starts from ``x_0 = v`` (or ``options.x0``), measures
``||f(x_k)||_1`` at every outer iterate, projects each accepted update onto
the probability simplex, and reports through a :class:`SolveReport`.
Numerical failures become status codes, never exceptions.
"""

import logging
import time
from collections.abc import Callable

import numpy as np

from .errors import (
    DegenerateProjectionError,
    ExtrapolationSingularError,
    SingularMatrixError,
)
from .extrapolation import SequenceWindow, extrapolate
from .krylov import LinearOperator, dense_solve, finite_difference_operator, gmres
from .models import ExtrapolationMethod, Method, SolveReport, SolveStatus, SolverOptions
from .problem import PageRankProblem, project
from .tensor_ops import check_vector

logger = logging.getLogger(__name__)

STAGNATION_FACTOR = 1.0 - 1e-3
ANDERSON_GUARD = 1e-30


class _Tracker:
    """Residual history, stagnation guard and report assembly for one solve."""

    def __init__(self, prob: PageRankProblem, options: SolverOptions, method: str):
        self.prob = prob
        self.options = options
        self.method = method
        self.history: list[float] = []
        self.steps: list[float] = []
        self.inner_counts: list[int] = []
        self.iterates: list[np.ndarray] = []
        self.inner_steps = 0
        self.fallbacks = 0
        self._best = np.inf
        self._since_best = 0
        self._start = time.perf_counter()

    def start_vector(self) -> np.ndarray:
        if self.options.x0 is None:
            return np.array(self.prob.v)
        return check_vector(self.options.x0, self.prob.dim, "x0").copy()

    def observe(self, x: np.ndarray) -> tuple[np.ndarray, SolveStatus | None]:
        """Evaluate ``f(x)``, record it, and decide whether to stop."""
        fx = self.prob.residual(x)
        norm = float(np.abs(fx).sum())
        self.history.append(norm)
        if self.options.record_iterates:
            self.iterates.append(x.copy())
        k = len(self.history) - 1
        logger.debug(f"{self.method} iteration {k}: ||f||_1 = {norm:.3e}")

        if norm < self.options.outer_tol:
            return fx, SolveStatus.CONVERGED
        if k >= self.options.max_outer:
            return fx, SolveStatus.MAX_ITERATIONS
        if norm < self._best * STAGNATION_FACTOR:
            self._best = norm
            self._since_best = 0
        else:
            self._since_best += 1
            if self._since_best >= self.options.stagnation_window:
                return fx, SolveStatus.STAGNATED
        return fx, None

    def record_inner(self, iterations: int) -> None:
        self.inner_counts.append(iterations)
        self.inner_steps += 1

    def report(self, x: np.ndarray, status: SolveStatus) -> SolveReport:
        report = SolveReport(
            solution=x,
            status=status,
            outer_iterations=len(self.history) - 1,
            residual_history=self.history,
            step_history=self.steps,
            inner_iteration_counts=self.inner_counts,
            inner_steps_total=self.inner_steps,
            extrapolation_fallbacks=self.fallbacks,
            wall_time=time.perf_counter() - self._start,
            method_name=self.method,
            iterates=self.iterates,
        )
        log = logger.info if report.converged else logger.warning
        log(
            f"{self.method} finished {status.value} after {report.outer_iterations} "
            f"iterations, ||f||_1 = {report.final_residual:.3e}, "
            f"{report.wall_time:.4f}s"
        )
        return report


def _run(
    prob: PageRankProblem,
    options: SolverOptions | None,
    method: str,
    step: Callable[[np.ndarray, np.ndarray, _Tracker], np.ndarray],
) -> SolveReport:
    """Outer loop shared by every solver; ``step`` maps (x_k, f(x_k)) to x_{k+1}."""
    options = options or SolverOptions()
    tracker = _Tracker(prob, options, method)
    logger.info(f"Solving {prob} with {method}")

    x = tracker.start_vector()
    fx, status = tracker.observe(x)
    while status is None:
        try:
            x_next = step(x, fx, tracker)
        except DegenerateProjectionError as e:
            logger.warning(f"{method}: {e}")
            status = SolveStatus.DEGENERATE_PROJECTION
            break
        except SingularMatrixError as e:
            logger.warning(f"{method}: {e}")
            status = SolveStatus.SINGULAR_JACOBIAN
            break
        tracker.steps.append(float(np.abs(x_next - x).sum()))
        x = x_next
        fx, status = tracker.observe(x)
    return tracker.report(x, status)


def _inner_tolerance(fx: np.ndarray, options: SolverOptions) -> float:
    if not options.forcing:
        return options.inner_tol
    eta = min(options.forcing_max, options.forcing_eta * float(np.abs(fx).sum()))
    return max(options.inner_tol, eta * float(np.linalg.norm(fx)))


def _newton_gmres_direction(
    prob: PageRankProblem, x: np.ndarray, fx: np.ndarray, tracker: _Tracker
) -> np.ndarray:
    """GMRES solution of ``J_f(x) delta = -f(x)`` from ``delta_0 = 0``."""
    options = tracker.options
    residual_check = None
    if options.fd_enabled:
        op = finite_difference_operator(prob.residual, x, fx)

        def residual_check(delta: np.ndarray) -> float:
            return float(np.linalg.norm(fx + op(delta)))

    else:
        op = LinearOperator(prob.dim, lambda w: prob.jacobian_apply(x, w))

    result = gmres(
        op,
        -fx,
        tol=_inner_tolerance(fx, options),
        p=options.krylov_dim,
        reorthogonalize=options.reorthogonalize,
        residual_check=residual_check,
    )
    tracker.record_inner(result.iterations)
    return result.solution


def anderson_update(
    x_k: np.ndarray, x_prev: np.ndarray, delta_k: np.ndarray, delta_prev: np.ndarray
) -> np.ndarray:
    """Depth-one Anderson mixing of two consecutive Newton steps (unprojected)."""
    change = delta_k - delta_prev
    denominator = float(change @ change)
    if denominator <= ANDERSON_GUARD:
        return x_k + delta_k
    gamma = float(delta_k @ change) / denominator
    return x_k + delta_k - gamma * ((x_k - x_prev) + change)


def solve_fixed_point(
    prob: PageRankProblem, options: SolverOptions | None = None
) -> SolveReport:
    """Iterate ``x_{k+1} = proj(g(x_k))``."""

    def step(x: np.ndarray, fx: np.ndarray, tracker: _Tracker) -> np.ndarray:
        return project(x + fx)

    return _run(prob, options, Method.FIXED_POINT.value, step)


def solve_newton(
    prob: PageRankProblem, options: SolverOptions | None = None
) -> SolveReport:
    """Newton's method with a dense LU solve of the Jacobian system."""

    def step(x: np.ndarray, fx: np.ndarray, tracker: _Tracker) -> np.ndarray:
        delta = dense_solve(prob.dense_jacobian(x), -fx)
        tracker.inner_steps += 1
        return project(x + delta)

    return _run(prob, options, Method.NEWTON.value, step)


def solve_newton_gmres(
    prob: PageRankProblem, options: SolverOptions | None = None
) -> SolveReport:
    """Newton-GMRES; the inner operator is the analytic Jacobian action
    unless ``options.fd_enabled`` selects finite differences."""
    options = options or SolverOptions()
    method = Method.NEWTON_GMRES_FD if options.fd_enabled else Method.NEWTON_GMRES

    def step(x: np.ndarray, fx: np.ndarray, tracker: _Tracker) -> np.ndarray:
        return project(x + _newton_gmres_direction(prob, x, fx, tracker))

    return _run(prob, options, method.value, step)


def solve_newton_gmres_fd(
    prob: PageRankProblem, options: SolverOptions | None = None
) -> SolveReport:
    """Newton-GMRES with finite-difference Jacobian-vector products."""
    options = (options or SolverOptions()).model_copy(update={"fd_enabled": True})
    return solve_newton_gmres(prob, options)


def solve_ng_extrapolated(
    prob: PageRankProblem,
    options: SolverOptions | None = None,
    method: ExtrapolationMethod | str = ExtrapolationMethod.MPE,
) -> SolveReport:
    """Newton-GMRES windows of ``q + 2`` iterates, extrapolated by MPE or RRE.

    One outer iteration is one cycle. Each cycle runs ``q + 2`` unprojected
    Newton-GMRES steps ``s_{i+1} = s_i + delta_i`` from ``s_0 = x_k``,
    extrapolates ``s_0 .. s_{q+1}`` and projects the result. ``s_{q+2}`` only
    serves the convergence test. A window iterate that already meets the
    outer tolerance ends the cycle early.
    """
    options = options or SolverOptions()
    method = ExtrapolationMethod(method)
    name = (Method.NG_MPE if method is ExtrapolationMethod.MPE else Method.NG_RRE).value
    q = options.window

    def step(x: np.ndarray, fx: np.ndarray, tracker: _Tracker) -> np.ndarray:
        window = [x]
        f_current = fx
        for _ in range(q + 2):
            s_next = window[-1] + _newton_gmres_direction(
                prob, window[-1], f_current, tracker
            )
            window.append(s_next)
            f_current = prob.residual(s_next)
            if float(np.abs(f_current).sum()) < options.outer_tol:
                logger.debug(f"{name}: window iterate {len(window) - 1} converged")
                return project(s_next)
        sequence = SequenceWindow(window[: q + 2])
        try:
            extrapolated = extrapolate(sequence, method).vector
        except ExtrapolationSingularError as e:
            tracker.fallbacks += 1
            logger.warning(f"{name}: {e}; falling back to s_{q + 1}")
            extrapolated = sequence.last
        return project(extrapolated)

    return _run(prob, options, name, step)


def solve_newton_anderson(
    prob: PageRankProblem, options: SolverOptions | None = None
) -> SolveReport:
    """Newton-GMRES with depth-one Anderson acceleration."""
    previous: dict[str, np.ndarray] = {}

    def step(x: np.ndarray, fx: np.ndarray, tracker: _Tracker) -> np.ndarray:
        delta = _newton_gmres_direction(prob, x, fx, tracker)
        if previous:
            candidate = anderson_update(x, previous["x"], delta, previous["delta"])
        else:
            candidate = x + delta
        previous["x"], previous["delta"] = x, delta
        return project(candidate)

    return _run(prob, options, Method.NEWTON_ANDERSON.value, step)


Solver = Callable[[PageRankProblem, SolverOptions | None], SolveReport]

SOLVERS: dict[Method, Solver] = {
    Method.FIXED_POINT: solve_fixed_point,
    Method.NEWTON: solve_newton,
    Method.NEWTON_GMRES: solve_newton_gmres,
    Method.NEWTON_GMRES_FD: solve_newton_gmres_fd,
    Method.NG_MPE: lambda prob, opts: solve_ng_extrapolated(
        prob, opts, ExtrapolationMethod.MPE
    ),
    Method.NG_RRE: lambda prob, opts: solve_ng_extrapolated(
        prob, opts, ExtrapolationMethod.RRE
    ),
    Method.NEWTON_ANDERSON: solve_newton_anderson,
}


def solve(
    prob: PageRankProblem,
    method: Method | str,
    options: SolverOptions | None = None,
) -> SolveReport:
    """Run the solver registered for ``method``."""
    return SOLVERS[Method(method)](prob, options)
