"""
Theory query schemas
理论误差查询的数据模型
"""

from typing import Tuple

from pydantic import BaseModel, Field, field_validator

from gridkrig.core.config import settings
from gridkrig.schemas.spectral import CovarianceModel, GridDesign


class TailCut(BaseModel):
    """Adaptive window rule for whole-line integrals: |ω| <= W, W grown until the tail bound is small"""
    initial_window: float = Field(default=1.0, gt=0, description="初始积分窗口 W")
    growth: float = Field(default=2.0, gt=1, description="窗口增长因子")
    max_window: float = Field(default=1e8, gt=0, description="最大窗口")


class QuadratureSpec(BaseModel):
    """Quadrature tolerances"""
    relative_tolerance: float = Field(default_factory=lambda: settings.QUAD_REL_TOL, gt=0, description="相对容差")
    absolute_tolerance: float = Field(default_factory=lambda: settings.QUAD_ABS_TOL, gt=0, description="绝对容差")
    tail_cut: TailCut = Field(default_factory=TailCut, description="尾部截断规则")
    max_subdivisions: int = Field(default_factory=lambda: settings.QUAD_MAX_SUBDIVISIONS, ge=1, description="最大细分数")
    alias_tolerance: float = Field(default_factory=lambda: settings.ALIAS_TOLERANCE, gt=0, description="混叠和截断容差")

    class Config:
        frozen = True


class ErrorQuery(BaseModel):
    """Interpolation-error query: data from true_model, predictor built from used_model"""
    true_model: CovarianceModel
    used_model: CovarianceModel
    design: GridDesign
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)

    class Config:
        frozen = True


class MinimaxQuery(BaseModel):
    """Smoothness budget L and grid steps"""
    L: float = Field(..., gt=0, description="光滑度预算 L")
    steps: Tuple[float, ...] = Field(..., description="网格步长")

    @field_validator("steps")
    @classmethod
    def steps_nonempty(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v or any(h <= 0 for h in v):
            raise ValueError("steps must be nonempty and positive")
        return v
