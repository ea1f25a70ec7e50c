"""
Application configuration settings
应用配置设置 - 数值容差、抖动策略与并行度
"""

import os
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults and runtime knobs, overridable through GRIDKRIG_* env vars"""

    model_config = SettingsConfigDict(
        env_prefix="GRIDKRIG_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Parallelism (GRIDKRIG_THREADS)
    THREADS: Optional[int] = Field(default=None, ge=1)

    # Quadrature defaults
    QUAD_REL_TOL: float = 1e-9
    QUAD_ABS_TOL: float = 1e-12
    QUAD_MAX_SUBDIVISIONS: int = 500

    # Aliased sums
    ALIAS_TOLERANCE: float = 1e-12
    ALIAS_MAX_TERMS: int = 10_000_000
    ALIAS_TOLERANCE_2D: float = 1e-6
    QUAD_REL_TOL_2D: float = 1e-6

    # Cholesky jitter escalation
    JITTER_START: float = 1e-8
    JITTER_MAX: float = 1e-4
    JITTER_FACTOR: float = 10.0

    # Simulation
    TEST_GRID_REFINEMENT: int = 5  # test grid step = h / refinement
    COINCIDENCE_TOL: float = 1e-12

    # Closed forms
    SINGULARITY_EPS: float = 1e-6

    # Statistics
    EXACT_WILCOXON_MAX_N: int = 25

    # Experiment defaults
    DEFAULT_REPLICATES: int = 20
    DEFAULT_SEED: int = 0
    DEFAULT_PROFILE: str = "Consistent"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: Optional[str] = None

    @property
    def worker_count(self) -> int:
        """有效并行线程数"""
        cpus = os.cpu_count() or 1
        if self.THREADS is None:
            return cpus
        return max(1, self.THREADS)


@lru_cache
def get_settings() -> Settings:
    return Settings()


# Global settings instance
settings = get_settings()
