"""
Statistics schemas
统计检验与汇总的数据模型
"""

from enum import Enum

from pydantic import BaseModel, Field, model_validator


class TestMethod(str, Enum):
    """p-value computation method"""
    EXACT = "Exact"
    NORMAL_APPROX = "NormalApprox"


class TestResult(BaseModel):
    """Wilcoxon signed-rank outcome"""
    statistic: float = Field(..., description="符号秩统计量 W = min(W+, W-)")
    p_value: float = Field(..., ge=0.0, le=1.0, description="双侧 p 值")
    n_effective: int = Field(..., ge=0, description="非零差值个数")
    method: TestMethod


class Summary(BaseModel):
    """Sample summary with t-based 95% interval"""
    mean: float
    std: float = Field(..., ge=0.0)
    stderr: float = Field(..., ge=0.0)
    ci95_low: float
    ci95_high: float
    n: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_interval(self) -> "Summary":
        if not (self.ci95_low <= self.mean <= self.ci95_high):
            raise ValueError("confidence interval must contain the mean")
        return self
