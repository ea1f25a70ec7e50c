"""
Experiment configuration and result schemas
实验配置与结果集的数据模型
"""

import hashlib
import json
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from gridkrig.schemas.spectral import CovarianceFamily, Profile


class Preset(str, Enum):
    """Experiment presets"""
    MATCHED_SWEEP = "MatchedSweep"
    MISSPEC_TABLE = "MisspecTable"
    KERNEL_FAMILIES = "KernelFamilies"
    WRONG_FAMILY = "WrongFamily"
    THEORY_CURVE = "TheoryCurve"


class ExperimentConfig(BaseModel):
    """Declarative description of one experiment"""
    preset: Preset = Field(..., description="预设实验")
    families_true: List[CovarianceFamily] = Field(..., min_length=1, description="真实协方差族")
    families_used: List[CovarianceFamily] = Field(..., min_length=1, description="回归使用的协方差族")
    theta: List[float] = Field(..., min_length=1, description="真实参数 θ 网格")
    theta_prime: List[float] = Field(..., min_length=1, description="使用参数 θ′ 网格")
    sample_sizes: List[int] = Field(..., min_length=1, description="样本量 S 网格")
    replicates: int = Field(default=20, ge=1, description="重复次数")
    seed: int = Field(default=0, ge=0, lt=2**64, description="随机种子")
    profile: Profile = Field(default=Profile.CONSISTENT, description="谱约定")
    interval: Tuple[float, float] = Field(default=(0.0, 1.0), description="模拟区间")
    output_dir: str = Field(default="results", description="输出目录")

    @field_validator("theta", "theta_prime")
    @classmethod
    def positive_params(cls, v: List[float]) -> List[float]:
        if any(t <= 0 for t in v):
            raise ValueError("parameters must be positive")
        return v

    @field_validator("sample_sizes")
    @classmethod
    def sizes_at_least_two(cls, v: List[int]) -> List[int]:
        if any(s < 2 for s in v):
            raise ValueError("sample sizes must be >= 2")
        return v

    def config_hash(self) -> str:
        """sha256 over the computation-relevant fields (output_dir excluded)"""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        sorted_data = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(sorted_data.encode()).hexdigest()


CSV_COLUMNS = [
    "family_true", "theta", "family_used", "theta_prime", "S", "h", "replicates",
    "emp_mean", "emp_std", "emp_ci_lo", "emp_ci_hi", "theory_error", "theory_profile", "p_value",
]


class ResultRow(BaseModel):
    """One results.csv row"""
    family_true: CovarianceFamily
    theta: float
    family_used: CovarianceFamily
    theta_prime: float
    S: int
    h: float
    replicates: int
    emp_mean: Optional[float] = None
    emp_std: Optional[float] = None
    emp_ci_lo: Optional[float] = None
    emp_ci_hi: Optional[float] = None
    theory_error: Optional[float] = None
    theory_profile: Profile
    p_value: Optional[float] = None


class CurveSeries(BaseModel):
    """A two-column plot series"""
    name: str = Field(..., description="曲线名，用于文件名 curve_<name>.dat")
    x_label: str = "S"
    y_label: str = "error"
    points: List[Tuple[float, float]] = Field(default_factory=list)


class Provenance(BaseModel):
    config_hash: str = Field(..., min_length=1)
    seed: int
    preset: Preset


class ResultSet(BaseModel):
    """Rows, plot series and provenance of one run"""
    rows: List[ResultRow] = Field(default_factory=list)
    curves: List[CurveSeries] = Field(default_factory=list)
    provenance: Provenance
