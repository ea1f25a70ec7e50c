"""
Simulation schemas
蒙特卡洛模拟的数据模型
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from gridkrig.schemas.spectral import CovarianceFamily, GridDesign, Profile


def _frozen_array(v) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


class Realization(BaseModel):
    """A sampled GP path on the training grid, plus the jointly sampled test-point values"""
    grid: GridDesign = Field(..., description="训练网格")
    values: np.ndarray = Field(..., description="训练点上的取值")
    seed: int = Field(..., ge=0, lt=2**64, description="生成种子")
    jitter_used: float = Field(..., description="实际使用的抖动")
    test_points: np.ndarray = Field(default_factory=lambda: _frozen_array([]), description="测试点")
    test_values: np.ndarray = Field(default_factory=lambda: _frozen_array([]), description="测试点真值")

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("values", "test_points", "test_values", mode="before")
    @classmethod
    def as_array(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_lengths(self) -> "Realization":
        if self.grid.size is None or len(self.values) != self.grid.size:
            raise ValueError("values length must equal grid size")
        if len(self.test_points) != len(self.test_values):
            raise ValueError("test points and test values differ in length")
        return self

    @property
    def points(self) -> np.ndarray:
        (lo, hi), = self.grid.extent
        return np.linspace(lo, hi, self.grid.size)


class PredictionSet(BaseModel):
    """Kriging predictions at test points; truth is NaN where unknown"""
    test_points: np.ndarray
    predicted: np.ndarray
    truth: np.ndarray

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("test_points", "predicted", "truth", mode="before")
    @classmethod
    def as_array(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_lengths(self) -> "PredictionSet":
        n = len(self.test_points)
        if len(self.predicted) != n or len(self.truth) != n:
            raise ValueError("test_points, predicted and truth must have equal lengths")
        return self


class ExperimentCell(BaseModel):
    """One (family_true, θ, family_used, θ′, S) combination"""
    family_true: CovarianceFamily
    theta: float = Field(..., gt=0)
    family_used: CovarianceFamily
    theta_prime: float = Field(..., gt=0)
    size: int = Field(..., ge=2, description="样本量 S")
    profile: Profile = Profile.CONSISTENT
    interval: Tuple[float, float] = (0.0, 1.0)

    class Config:
        frozen = True

    @property
    def h(self) -> float:
        lo, hi = self.interval
        return (hi - lo) / (self.size - 1)

    @property
    def matched(self) -> bool:
        return self.family_true == self.family_used and self.theta == self.theta_prime

    @property
    def key(self) -> str:
        return f"{self.family_true.value}_t{self.theta:g}_{self.family_used.value}_tp{self.theta_prime:g}_S{self.size}"


class ErrorSamples(BaseModel):
    """Per-replicate empirical errors for one cell"""
    cell: ExperimentCell
    replicate_errors: List[float] = Field(..., description="各次重复的经验误差")
    seed_base: int = Field(..., ge=0)
    jitters: List[float] = Field(default_factory=list, description="各次重复使用的抖动")

    @field_validator("replicate_errors")
    @classmethod
    def errors_nonnegative(cls, v: List[float]) -> List[float]:
        if any(e < 0 for e in v):
            raise ValueError("errors must be nonnegative")
        return v

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.replicate_errors)) if self.replicate_errors else None
