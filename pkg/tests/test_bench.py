"""Tests for benchmark sweeps and performance profiles."""

import csv

import numpy as np
import pytest
from pydantic import ValidationError

from multilinear_pagerank.bench import (
    BENCH_COLUMNS,
    BenchmarkSuite,
    performance_profile,
    read_bench_csv,
    run_benchmark,
    write_bench_csv,
    write_profile_csv,
)
from multilinear_pagerank.config import settings
from multilinear_pagerank.errors import ParameterError, ParseError
from multilinear_pagerank.models import BenchmarkRow, Method, SolverOptions


def row(problem, method, status="converged", iters=1, time_s=0.1, alpha=0.5):
    return BenchmarkRow(
        problem=problem,
        alpha=alpha,
        method=method,
        status=status,
        iters=iters,
        inner_iters=0,
        time_s=time_s,
        final_residual=1e-13 if status == "converged" else 1e-3,
    )


class TestBenchmarkSuite:
    def test_defaults(self, synthetic_problem):
        """Test the default grid."""
        suite = BenchmarkSuite(problems=[("a", synthetic_problem())])
        assert suite.alphas == settings.alpha_grid
        assert suite.methods == list(Method)

    def test_rejects_empty_and_duplicate_problems(self, synthetic_problem):
        """Test suite validation."""
        with pytest.raises(ValidationError):
            BenchmarkSuite(problems=[])
        prob = synthetic_problem()
        with pytest.raises(ValidationError):
            BenchmarkSuite(problems=[("a", prob), ("a", prob)])


class TestRunBenchmark:
    """Sweeps over small synthetic problems."""

    def setup_method(self):
        """Set up tight solver options."""
        self.options = SolverOptions(outer_tol=1e-12)

    def make_suite(self, synthetic_problem, **kwargs):
        return BenchmarkSuite(
            problems=[
                ("small", synthetic_problem(n=5, seed=1)),
                ("medium", synthetic_problem(n=8, seed=2)),
            ],
            alphas=[0.3, 0.45],
            methods=[Method.FIXED_POINT, Method.NEWTON_GMRES],
            options=self.options,
            **kwargs,
        )

    def test_rows_follow_sweep_order(self, synthetic_problem):
        """Test rows come out in problem, alpha, method order."""
        rows = run_benchmark(self.make_suite(synthetic_problem), jobs=1)
        assert [(r.problem, r.alpha, r.method) for r in rows] == [
            (name, alpha, method)
            for name in ["small", "medium"]
            for alpha in [0.3, 0.45]
            for method in ["fp", "ng"]
        ]
        assert all(r.solved for r in rows)
        assert all(r.final_residual < 1e-12 for r in rows)

    def test_threads_give_the_same_rows(self, synthetic_problem):
        """Test a thread pool reproduces the serial rows."""
        suite = self.make_suite(synthetic_problem)
        serial = run_benchmark(suite, jobs=1)
        threaded = run_benchmark(suite, jobs=3)
        for a, b in zip(serial, threaded, strict=True):
            assert (a.problem, a.alpha, a.method, a.status, a.iters) == (
                b.problem,
                b.alpha,
                b.method,
                b.status,
                b.iters,
            )

    def test_failing_cell_becomes_error_row(self, synthetic_problem):
        """Test an exception in one cell."""
        suite = BenchmarkSuite(
            problems=[("bad-start", synthetic_problem(n=5))],
            alphas=[0.4],
            methods=[Method.NEWTON],
            options=SolverOptions(x0=np.ones(3) / 3),
        )
        (result,) = run_benchmark(suite)
        assert result.status == "error"
        assert not result.solved
        assert np.isnan(result.final_residual)


class TestBenchCsv:
    def test_write_then_read(self, tmp_path):
        """Test the CSV writer and reader agree."""
        rows = [
            row("p1", "ng", iters=3, time_s=0.0123456789, alpha=0.85),
            row("p1", "fp", status="max_iterations", iters=1000, alpha=0.85),
        ]
        path = tmp_path / "bench.csv"
        write_bench_csv(rows, path)

        with open(path, newline="") as handle:
            assert next(csv.reader(handle)) == BENCH_COLUMNS
        loaded = read_bench_csv(path)
        assert [(r.problem, r.alpha, r.method, r.status, r.iters) for r in loaded] == [
            ("p1", 0.85, "ng", "converged", 3),
            ("p1", 0.85, "fp", "max_iterations", 1000),
        ]
        assert loaded[0].time_s == pytest.approx(0.012346)
        assert loaded[1].final_residual == pytest.approx(1e-3)

    def test_missing_columns(self, tmp_path):
        """Test a header without the required columns."""
        path = tmp_path / "bench.csv"
        path.write_text("problem,alpha,method\np1,0.5,ng\n")
        with pytest.raises(ParseError):
            read_bench_csv(path)

    def test_bad_row_names_the_line(self, tmp_path):
        """Test a malformed row reports its line."""
        path = tmp_path / "bench.csv"
        path.write_text(
            ",".join(BENCH_COLUMNS)
            + "\np1,0.5,ng,converged,3,4,0.1,1e-13"
            + "\np1,0.5,fp,converged,many,4,0.1,1e-13\n"
        )
        with pytest.raises(ParseError) as excinfo:
            read_bench_csv(path)
        assert excinfo.value.line == 3


class TestPerformanceProfile:
    """Dolan-More profiles on a hand-made table."""

    def setup_method(self):
        """Set up two methods over two problems."""
        self.rows = [
            row("p1", "A", iters=2),
            row("p1", "B", iters=4),
            row("p2", "A", status="max_iterations", iters=1000),
            row("p2", "B", iters=3),
        ]

    def profiles(self, rows, metric="iters"):
        return {p.method: p for p in performance_profile(rows, metric)}

    def test_solve_rates(self):
        """Test the fraction of problems each method solves."""
        profiles = self.profiles(self.rows)
        assert profiles["A"].solve_rate == 0.5
        assert profiles["B"].solve_rate == 1.0

    def test_values_at_one_and_tau_max(self):
        """Test the profile endpoints."""
        profiles = self.profiles(self.rows)
        for method, at_one, at_max in [("A", 0.5, 0.5), ("B", 0.5, 1.0)]:
            points = profiles[method].points
            assert points[0].tau == 1.0
            assert points[0].fraction == at_one
            assert points[-1].tau >= 2.0
            assert points[-1].fraction == at_max

    def test_profiles_are_monotone(self):
        """Test profiles never decrease."""
        for profile in self.profiles(self.rows).values():
            fractions = [p.fraction for p in profile.points]
            assert fractions == sorted(fractions)
            assert all(0.0 <= f <= 1.0 for f in fractions)

    def test_grid_contains_exact_ratios(self):
        """Test every observed ratio is a grid point."""
        taus = [p.tau for p in self.profiles(self.rows)["B"].points]
        assert 2.0 in taus
        assert len(taus) >= 50

    def test_unsolved_instance_counts_against_everyone(self):
        """Test a problem no method solves."""
        rows = self.rows + [
            row("p3", "A", status="stagnated"),
            row("p3", "B", status="error"),
        ]
        profiles = self.profiles(rows)
        assert profiles["B"].points[-1].fraction == pytest.approx(2 / 3)

    def test_zero_cost_ties(self):
        """Test two zero costs tie at ratio one."""
        rows = [row("p1", "A", time_s=0.0), row("p1", "B", time_s=0.0)]
        profiles = self.profiles(rows, "time_s")
        assert profiles["A"].points[0].fraction == 1.0
        assert profiles["B"].points[0].fraction == 1.0

    def test_errors(self):
        """Test invalid metrics and empty input."""
        with pytest.raises(ParameterError):
            performance_profile(self.rows, "residual")
        with pytest.raises(ParameterError):
            performance_profile([row("p1", "A", status="stagnated")])

    def test_write_profile_csv(self, tmp_path):
        """Test the profile CSV layout."""
        profiles = performance_profile(self.rows, "iters")
        path = tmp_path / "profile.csv"
        write_profile_csv(profiles, path)
        with open(path, newline="") as handle:
            records = list(csv.reader(handle))
        assert records[0] == ["metric", "method", "tau", "fraction"]
        assert len(records) == 1 + sum(len(p.points) for p in profiles)
        assert {r[1] for r in records[1:]} == {"A", "B"}
