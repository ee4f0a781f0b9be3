"""Benchmark sweeps over (problem, alpha, method) and Dolan-More profiles."""

import csv
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import settings
from .errors import MultilinearPageRankError, ParameterError, ParseError
from .models import (
    BenchmarkRow,
    Method,
    PerformanceProfile,
    ProfilePoint,
    SolverOptions,
)
from .problem import PageRankProblem
from .solvers import solve

logger = logging.getLogger(__name__)

BENCH_COLUMNS = [
    "problem",
    "alpha",
    "method",
    "status",
    "iters",
    "inner_iters",
    "time_s",
    "final_residual",
]
PROFILE_COLUMNS = ["metric", "method", "tau", "fraction"]
PROFILE_METRICS = ("iters", "time_s")
TAU_GRID_POINTS = 50


class BenchmarkSuite(BaseModel):
    """Named problems swept over damping factors and methods."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    problems: list[tuple[str, PageRankProblem]] = Field(..., min_length=1)
    alphas: list[float] = Field(
        default_factory=lambda: list(settings.alpha_grid), min_length=1
    )
    methods: list[Method] = Field(default_factory=lambda: list(Method), min_length=1)
    options: SolverOptions = Field(default_factory=SolverOptions)

    @field_validator("problems")
    @classmethod
    def _unique_names(
        cls, problems: list[tuple[str, PageRankProblem]]
    ) -> list[tuple[str, PageRankProblem]]:
        names = [name for name, _ in problems]
        if len(set(names)) != len(names):
            raise ValueError(f"problem names are not unique: {names}")
        return problems


def _run_cell(
    name: str,
    prob: PageRankProblem,
    alpha: float,
    method: Method,
    options: SolverOptions,
) -> BenchmarkRow:
    try:
        report = solve(prob.with_alpha(alpha), method, options)
    except MultilinearPageRankError as e:
        logger.error(f"{name} alpha={alpha} {method.value}: {e}")
        return BenchmarkRow(
            problem=name,
            alpha=alpha,
            method=method.value,
            status="error",
            iters=0,
            inner_iters=0,
            time_s=0.0,
            final_residual=float("nan"),
        )
    return BenchmarkRow(
        problem=name,
        alpha=alpha,
        method=method.value,
        status=report.status.value,
        iters=report.outer_iterations,
        inner_iters=sum(report.inner_iteration_counts),
        time_s=report.wall_time,
        final_residual=report.final_residual,
    )


def run_benchmark(suite: BenchmarkSuite, jobs: int | None = None) -> list[BenchmarkRow]:
    """Solve every cell of ``suite``; rows come back in sweep order.

    Args:
        suite: Problems, damping factors, methods and shared options.
        jobs: Worker threads; defaults to ``settings.bench_jobs``.
    """
    jobs = settings.bench_jobs if jobs is None else jobs
    cells = [
        (name, prob, alpha, method, suite.options)
        for name, prob in suite.problems
        for alpha in suite.alphas
        for method in suite.methods
    ]
    logger.info(f"Running {len(cells)} benchmark cells with {jobs} job(s)")
    if jobs <= 1:
        return [_run_cell(*cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(lambda cell: _run_cell(*cell), cells))


def write_bench_csv(rows: Sequence[BenchmarkRow], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    **row.model_dump(),
                    "alpha": f"{row.alpha:.17g}",
                    "time_s": f"{row.time_s:.6f}",
                    "final_residual": f"{row.final_residual:.6e}",
                }
            )
    logger.info(f"Wrote {len(rows)} benchmark rows to {path}")


def read_bench_csv(path: Path | str) -> list[BenchmarkRow]:
    """Parse a benchmark CSV written by :func:`write_bench_csv`."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = set(BENCH_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ParseError(f"missing columns {sorted(missing)}", path, 1)
        rows = []
        for line, record in enumerate(reader, start=2):
            try:
                rows.append(BenchmarkRow(**{key: record[key] for key in BENCH_COLUMNS}))
            except ValueError as e:
                raise ParseError(str(e), path, line) from e
    return rows


def _ratios(rows: Sequence[BenchmarkRow], metric: str) -> dict[str, np.ndarray]:
    """Per-method performance ratios over every (problem, alpha) instance."""
    methods = list(dict.fromkeys(row.method for row in rows))
    instances = list(dict.fromkeys((row.problem, row.alpha) for row in rows))
    instance_index = {instance: i for i, instance in enumerate(instances)}
    method_index = {method: j for j, method in enumerate(methods)}
    table = np.full((len(instances), len(methods)), np.inf)
    for row in rows:
        if row.solved:
            i = instance_index[(row.problem, row.alpha)]
            table[i, method_index[row.method]] = float(getattr(row, metric))

    best = table.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(best > 0, table / np.where(best > 0, best, 1.0), np.inf)
    # a best cost of zero gives ratio 1 to every method that matches it
    ratios[(best == 0) & (table == 0)] = 1.0
    ratios[~np.isfinite(table)] = np.inf
    return {method: ratios[:, j] for j, method in enumerate(methods)}


def performance_profile(
    rows: Sequence[BenchmarkRow], metric: str = "iters"
) -> list[PerformanceProfile]:
    """Dolan-More profiles ``rho_m(tau)`` for ``metric`` in ``iters``/``time_s``.

    Unsolved cells get ratio infinity. Each profile is evaluated on 50
    log-spaced points of ``[1, tau_max]`` merged with the exact finite ratios.

    Raises:
        ParameterError: unknown metric or no solved cell at all.
    """
    if metric not in PROFILE_METRICS:
        raise ParameterError(f"metric must be one of {PROFILE_METRICS}, got {metric}")
    if not any(row.solved for row in rows):
        raise ParameterError("no benchmark cell converged; profile is undefined")

    ratios = _ratios(rows, metric)
    finite = np.concatenate([r[np.isfinite(r)] for r in ratios.values()])
    tau_max = max(float(finite.max()), 1.0)
    grid = np.unique(
        np.concatenate(
            [np.logspace(0.0, np.log10(tau_max), TAU_GRID_POINTS), finite, [1.0]]
        )
    )

    profiles = []
    for method, r in ratios.items():
        solved = np.sort(r[np.isfinite(r)])
        counts = np.searchsorted(solved, grid, side="right")
        profiles.append(
            PerformanceProfile(
                method=method,
                metric=metric,
                solve_rate=solved.size / r.size,
                points=[
                    ProfilePoint(tau=float(tau), fraction=count / r.size)
                    for tau, count in zip(grid, counts, strict=True)
                ],
            )
        )
    return profiles


def write_profile_csv(profiles: Sequence[PerformanceProfile], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(PROFILE_COLUMNS)
        for profile in profiles:
            for point in profile.points:
                writer.writerow(
                    [
                        profile.metric,
                        profile.method,
                        f"{point.tau:.10g}",
                        f"{point.fraction:.10g}",
                    ]
                )
