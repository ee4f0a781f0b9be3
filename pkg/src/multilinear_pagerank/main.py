"""Command-line entry point: ``mlpagerank solve | bench | profile``."""

import argparse
import csv
import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .bench import (
    PROFILE_METRICS,
    BenchmarkSuite,
    performance_profile,
    read_bench_csv,
    run_benchmark,
    write_bench_csv,
    write_profile_csv,
)
from .config import settings
from .datagen import (
    build_real_world_problem,
    gen_synthetic,
    load_edgelist,
    load_suite,
    load_tensor,
)
from .errors import (
    MultilinearPageRankError,
    ParameterError,
    ParseError,
    ShapeError,
    StochasticityError,
)
from .models import Method, SolverOptions
from .problem import PageRankProblem
from .solvers import solve

logger = logging.getLogger(__name__)

EXIT_NOT_CONVERGED = 1
EXIT_STAGE_FAILED = 2


class StageError(Exception):
    """A CLI stage (parse, validate, solve, write) failed."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _stage_of(error: Exception, default: str) -> str:
    if isinstance(error, ParseError | OSError):
        return "parse" if default != "write" else default
    if isinstance(
        error, StochasticityError | ParameterError | ShapeError | ValidationError
    ):
        return "validate"
    return default


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise package, validation and I/O errors as :class:`StageError`."""
    try:
        yield
    except (MultilinearPageRankError, ValidationError, OSError) as e:
        raise StageError(_stage_of(e, name), e) from e


# ----------------------------------------------------------------------
# Argument types


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        message = f"expected comma-separated reals: {text}"
        raise argparse.ArgumentTypeError(message) from e


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        message = f"expected comma-separated integers: {text}"
        raise argparse.ArgumentTypeError(message) from e


def _method_list(text: str) -> list[Method]:
    try:
        return [Method(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as e:
        choices = ",".join(method.value for method in Method)
        raise argparse.ArgumentTypeError(f"methods must be among {choices}") from e


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, help="outer tolerance on ||f||_1")
    parser.add_argument("--inner-tol", type=float, help="inner GMRES tolerance")
    parser.add_argument("--kmax", type=int, help="maximum outer iterations")
    parser.add_argument("--p", type=int, help="Krylov subspace dimension")
    parser.add_argument("--q", type=int, help="extrapolation window parameter")
    parser.add_argument(
        "--fd", action="store_true", help="finite-difference Jacobian products"
    )
    parser.add_argument(
        "--forcing", action="store_true", help="relative inner tolerance"
    )


def _solver_options(args: argparse.Namespace) -> SolverOptions:
    overrides = {
        "outer_tol": args.tol,
        "inner_tol": args.inner_tol,
        "max_outer": args.kmax,
        "krylov_dim": args.p,
        "window": args.q,
    }
    return SolverOptions(
        fd_enabled=args.fd,
        forcing=args.forcing,
        **{key: value for key, value in overrides.items() if value is not None},
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlpagerank", description="Multilinear PageRank solvers and benchmarks"
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level", default=None, help=f"default {settings.log_level}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", help="solve one problem")
    source = solve_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--tensor", type=Path, help="tensor file")
    source.add_argument("--synthetic", type=int, metavar="N", help="random tensor")
    source.add_argument("--graph", type=Path, help="edge list of a directed graph")
    solve_parser.add_argument("--seed", type=int, default=0)
    solve_parser.add_argument("--gamma", type=float, default=None)
    solve_parser.add_argument("--repair", action="store_true")
    solve_parser.add_argument("--alpha", type=float, required=True)
    solve_parser.add_argument(
        "--method",
        default=Method.NEWTON_GMRES.value,
        choices=[method.value for method in Method],
    )
    _add_solver_flags(solve_parser)
    solve_parser.add_argument("--out", type=Path, help="JSON report path")
    solve_parser.add_argument("--history", type=Path, help="residual history CSV")
    solve_parser.add_argument("--emit-solution", action="store_true")
    solve_parser.set_defaults(handler=cmd_solve)

    bench_parser = commands.add_parser("bench", help="sweep a problem suite")
    suite = bench_parser.add_mutually_exclusive_group(required=True)
    suite.add_argument("--suite", type=Path, help="directory of *.mlpr files")
    suite.add_argument("--synthetic-sizes", type=_int_list, metavar="N,N,...")
    bench_parser.add_argument("--seed", type=int, default=0)
    bench_parser.add_argument("--alphas", type=_float_list, default=None)
    bench_parser.add_argument("--methods", type=_method_list, default=None)
    bench_parser.add_argument("--jobs", type=int, default=None)
    bench_parser.add_argument("--out", type=Path, default=Path("bench.csv"))
    _add_solver_flags(bench_parser)
    bench_parser.set_defaults(handler=cmd_bench)

    profile_parser = commands.add_parser("profile", help="performance profiles")
    profile_parser.add_argument("bench_csv", type=Path)
    profile_parser.add_argument(
        "--metric", choices=[*PROFILE_METRICS, "all"], default="all"
    )
    profile_parser.add_argument("--alpha", type=float, default=None)
    profile_parser.add_argument("--out", type=Path, default=Path("profile.csv"))
    profile_parser.add_argument("--json", type=Path, default=None)
    profile_parser.set_defaults(handler=cmd_profile)
    return parser


# ----------------------------------------------------------------------
# Commands


def _load_problem(args: argparse.Namespace) -> tuple[str, PageRankProblem]:
    if args.graph is not None:
        with stage("parse"):
            graph = load_edgelist(args.graph)
        with stage("validate"):
            return args.graph.stem, build_real_world_problem(
                graph, args.alpha, args.gamma
            )
    if args.tensor is not None:
        with stage("parse"):
            tensor = load_tensor(args.tensor, repair=args.repair)
        name, v = args.tensor.stem, None
    else:
        with stage("validate"):
            tensor, v = gen_synthetic(args.synthetic, args.seed)
        name = f"synthetic-n{args.synthetic}-s{args.seed}"
    with stage("validate"):
        return name, PageRankProblem(tensor, args.alpha, v)


def cmd_solve(args: argparse.Namespace) -> int:
    name, prob = _load_problem(args)
    with stage("validate"):
        options = _solver_options(args)
    with stage("solve"):
        report = solve(prob, args.method, options)

    summary = report.to_summary(
        problem=name,
        alpha=prob.alpha,
        n=prob.dim,
        m=prob.order,
        emit_solution=args.emit_solution,
    )
    with stage("write"):
        if args.out is not None:
            args.out.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
            logger.info(f"Wrote report to {args.out}")
        else:
            print(json.dumps(summary, indent=2))
        if args.history is not None:
            with open(args.history, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["iter", "residual_l1"])
                for k, value in enumerate(report.residual_history):
                    writer.writerow([k, f"{value:.17g}"])
    return 0 if report.converged else EXIT_NOT_CONVERGED


def cmd_bench(args: argparse.Namespace) -> int:
    alphas = args.alphas or list(settings.alpha_grid)
    if args.suite is not None:
        with stage("parse"):
            tensors = [(name, tensor, None) for name, tensor in load_suite(args.suite)]
    else:
        with stage("validate"):
            tensors = [
                (f"synthetic-n{n}", *gen_synthetic(n, args.seed + index))
                for index, n in enumerate(args.synthetic_sizes)
            ]
    with stage("validate"):
        # each cell rebinds alpha, so a bad grid value fails only its own cells
        suite = BenchmarkSuite(
            problems=[
                (name, PageRankProblem(tensor, 0.0, v, validate_tensor=False))
                for name, tensor, v in tensors
            ],
            alphas=alphas,
            methods=args.methods or list(Method),
            options=_solver_options(args),
        )
    rows = run_benchmark(suite, jobs=args.jobs)
    with stage("write"):
        write_bench_csv(rows, args.out)
    solved = sum(row.solved for row in rows)
    logger.info(f"{solved}/{len(rows)} benchmark cells converged")
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    with stage("parse"):
        rows = read_bench_csv(args.bench_csv)
    if args.alpha is not None:
        rows = [row for row in rows if row.alpha == args.alpha]
    metrics = PROFILE_METRICS if args.metric == "all" else (args.metric,)
    with stage("validate"):
        profiles = [
            profile
            for metric in metrics
            for profile in performance_profile(rows, metric)
        ]
    with stage("write"):
        write_profile_csv(profiles, args.out)
        if args.json is not None:
            payload = [profile.model_dump() for profile in profiles]
            args.json.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    for profile in profiles:
        logger.info(
            f"{profile.metric} {profile.method}: solve rate {profile.solve_rate:.2f}"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or settings.log_level
    logging.basicConfig(level=getattr(logging, level.upper()))
    try:
        return args.handler(args)
    except StageError as e:
        logger.error(str(e))
        return EXIT_STAGE_FAILED


if __name__ == "__main__":
    sys.exit(main())
