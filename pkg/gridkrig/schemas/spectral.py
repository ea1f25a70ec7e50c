"""
Covariance model and grid design schemas
协方差模型与网格设计的数据模型
"""

import math
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class CovarianceFamily(str, Enum):
    """Covariance families"""
    EXPONENTIAL = "Exponential"
    MATERN32 = "Matern32"
    MATERN52 = "Matern52"
    SQUARED_EXPONENTIAL = "SquaredExponential"


class Profile(str, Enum):
    """Spectral convention profile"""
    PAPER_VERBATIM = "PaperVerbatim"
    CONSISTENT = "Consistent"


class SumMode(str, Enum):
    """Aliased-sum evaluation mode"""
    CLOSED_FORM = "ClosedForm"
    TRUNCATED = "Truncated"


# Matérn smoothness per family; SE is the ν → ∞ limit
MATERN_NU = {
    CovarianceFamily.EXPONENTIAL: 0.5,
    CovarianceFamily.MATERN32: 1.5,
    CovarianceFamily.MATERN52: 2.5,
}


class CovarianceModel(BaseModel):
    """A covariance family with inverse length-scale theta"""
    family: CovarianceFamily = Field(..., description="协方差族")
    theta: float = Field(..., gt=0, description="逆长度尺度 θ")
    profile: Profile = Field(default=Profile.CONSISTENT, description="谱约定")

    class Config:
        frozen = True

    @field_validator("theta")
    @classmethod
    def theta_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("theta must be finite")
        return v

    @property
    def label(self) -> str:
        return f"{self.family.value}(theta={self.theta:g})"


class GridDesign(BaseModel):
    """Regular grid: per-axis steps, optional finite extent"""
    dimension: int = Field(default=1, ge=1, le=2, description="维度 d")
    steps: Tuple[float, ...] = Field(..., description="各轴步长 h_i")
    extent: Optional[Tuple[Tuple[float, float], ...]] = Field(None, description="有限区间（仅模拟）")
    size: Optional[int] = Field(None, description="每轴点数 S")

    class Config:
        frozen = True

    @field_validator("steps")
    @classmethod
    def steps_positive(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v or any(not (h > 0 and math.isfinite(h)) for h in v):
            raise ValueError("all steps must be positive and finite")
        return v

    @model_validator(mode="after")
    def check_shape(self) -> "GridDesign":
        if len(self.steps) != self.dimension:
            raise ValueError("one step per axis required")
        if self.extent is not None:
            if len(self.extent) != self.dimension:
                raise ValueError("one interval per axis required")
            if self.size is None or self.size < 2:
                raise ValueError("finite grid needs size >= 2")
            for (lo, hi), h in zip(self.extent, self.steps):
                if not math.isclose(h, (hi - lo) / (self.size - 1), rel_tol=1e-12):
                    raise ValueError("step must equal extent_length / (size - 1)")
        return self

    @property
    def h(self) -> float:
        """Largest step (the 1-D step when dimension == 1)"""
        return max(self.steps)
