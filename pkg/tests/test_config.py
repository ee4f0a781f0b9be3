"""Tests for environment-driven settings."""

import os
from pathlib import Path
from unittest.mock import patch

from multilinear_pagerank.config import Settings, settings
from multilinear_pagerank.models import SolverOptions


class TestSettings:
    """Settings defaults, MLPR_ overrides and their effect on solver options."""

    def test_defaults(self):
        """Test the built-in defaults."""
        with patch.dict(os.environ, {}, clear=True):
            fresh = Settings(_env_file=None)
        assert fresh.outer_tol == 1e-15
        assert fresh.inner_tol == 1e-14
        assert fresh.max_outer == 1000
        assert fresh.krylov_dim == 40
        assert fresh.window == 4
        assert fresh.default_gamma == 0.5
        assert fresh.benchmark_dir == Path("data/benchmarks")
        assert fresh.alpha_grid[0] == 0.49
        assert fresh.alpha_grid[-1] == 0.999

    def test_environment_overrides(self):
        """Test MLPR_ environment variables."""
        env = {
            "MLPR_OUTER_TOL": "1e-10",
            "MLPR_KRYLOV_DIM": "25",
            "MLPR_ALPHA_GRID": "[0.5, 0.9]",
            "MLPR_LOG_LEVEL": "DEBUG",
        }
        with patch.dict(os.environ, env):
            fresh = Settings(_env_file=None)
        assert fresh.outer_tol == 1e-10
        assert fresh.krylov_dim == 25
        assert fresh.alpha_grid == [0.5, 0.9]
        assert fresh.log_level == "DEBUG"

    def test_solver_options_follow_settings(self):
        """Test options read their defaults from settings."""
        with patch.object(settings, "window", 5), patch.object(
            settings, "outer_tol", 1e-9
        ):
            options = SolverOptions()
        assert options.window == 5
        assert options.outer_tol == 1e-9
        assert SolverOptions().window == settings.window

    def test_explicit_options_win(self):
        """Test explicit options override settings."""
        with patch.object(settings, "krylov_dim", 7):
            assert SolverOptions(krylov_dim=12).krylov_dim == 12
