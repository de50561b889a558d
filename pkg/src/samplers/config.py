"""
单次采样运行的配置
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_MAX_ITERATIONS = 10_000


class Method(str, Enum):
    """采样方法"""
    SMC = "SMC"
    RSMC = "RSMC"
    PS = "PS"
    WFSMC = "WFSMC"

    @property
    def tag(self) -> int:
        """随机流中的方法标签"""
        return list(Method).index(self)

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


class Resampler(str, Enum):
    SYSTEMATIC = "systematic"
    MULTINOMIAL = "multinomial"


class RunConfig(BaseModel):
    """
    采样运行配置

    SMC/RSMC/WFSMC 要求 α ∈ (0, 1)；PS 允许 α > 1，
    α ∈ (0, t−1) 的约束在运行中动态体现（β 停留在原值）
    """
    model_config = ConfigDict(frozen=True)

    method: Method = Field(..., description="采样方法")
    n_particles: int = Field(..., ge=2, description="每代粒子数 N")
    ess_alpha: float = Field(..., gt=0.0, description="ESS阈值 α（相对于 N）")
    mcmc_steps: int = Field(..., ge=1, description="每次迭代的RWM步数 k")
    max_iterations: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1, description="迭代上限")
    resampler: Resampler = Field(default=Resampler.SYSTEMATIC, description="重采样方法")
    final_ess_target: Optional[float] = Field(
        default=None,
        gt=0.0,
        description="PS在β=1后继续迭代，直到持久ESS达到该值；None表示不继续",
    )
    workers: int = Field(default=1, ge=1, description="RWM扫描的线程数，不影响结果")

    @field_validator("method", mode="before")
    @classmethod
    def parse_method(cls, v):
        return Method.parse(v)

    @model_validator(mode="after")
    def check_alpha(self) -> "RunConfig":
        if self.method != Method.PS and not self.ess_alpha < 1.0:
            raise ValueError(f"{self.method.value} needs ess_alpha in (0, 1), got {self.ess_alpha}")
        if self.final_ess_target is not None and self.method != Method.PS:
            raise ValueError("final_ess_target only applies to PS")
        return self
