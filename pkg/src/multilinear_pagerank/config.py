"""Configuration management for the multilinear PageRank toolkit."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix ``MLPR_``)."""

    # Solver defaults
    outer_tol: float = 1e-15
    inner_tol: float = 1e-14
    max_outer: int = 1000
    krylov_dim: int = 40
    window: int = 4
    stagnation_window: int = 20

    # Tensor validation
    column_tol: float = 1e-12
    dense_jacobian_cap: int = 5000  # largest n for which the dense Newton runs

    # Real-world pipeline
    default_gamma: float = 0.5

    # Benchmark harness
    bench_jobs: int = 1
    benchmark_dir: Path = Path("data/benchmarks")
    alpha_grid: list[float] = [0.49, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99, 0.999]

    # Logging
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="MLPR_", env_file=".env", case_sensitive=False, extra="ignore"
    )


# Global settings instance
settings = Settings()
