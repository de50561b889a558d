"""
实验配置（YAML → pydantic）

示例见 config/experiments/，完整字段说明见 docs/CONFIG_SCHEMA.md
"""

import logging
import os
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from samplers.config import DEFAULT_MAX_ITERATIONS, Method, Resampler
from utils.error_handler import ConfigError

logger = logging.getLogger(__name__)

AUTO = "auto"
BASELINE_ALPHA = 0.9
DEFAULT_PS_ALPHA = 3.0


class TargetSection(BaseModel):
    name: str = Field(..., description="目标名称（见 list-targets）")
    options: Dict[str, Any] = Field(default_factory=dict, description="目标构造参数，如 dim、path")


class GridSection(BaseModel):
    n_particles: List[int] = Field(default=[32, 64, 128], description="粒子数 N 网格")
    mcmc_steps: List[int] = Field(default=[25, 50, 100, 200], description="MCMC步数 k 网格")

    @field_validator("n_particles")
    @classmethod
    def check_n(cls, v: List[int]) -> List[int]:
        if not v or any(n < 2 for n in v):
            raise ValueError("n_particles must be a non-empty list of integers ≥ 2")
        return v

    @field_validator("mcmc_steps")
    @classmethod
    def check_k(cls, v: List[int]) -> List[int]:
        if not v or any(k < 1 for k in v):
            raise ValueError("mcmc_steps must be a non-empty list of integers ≥ 1")
        return v


class ReferenceSection(BaseModel):
    n_particles: int = Field(default=4096, ge=2, description="参考运行粒子数 N_ref")
    alpha: float = Field(default=0.999, gt=0.0, lt=1.0, description="参考运行ESS阈值 α_ref")
    replicates: int = Field(default=20, ge=1, description="参考运行次数 L_ref")
    mcmc_steps: int = Field(default=25, ge=1, description="参考运行每次迭代的RWM步数")
    self_check: bool = Field(default=True, description="有解析真值时是否仍执行参考运行作为自检")
    path: Optional[str] = Field(default=None, description="已有 reference.json 的路径，存在时直接复用")


class SamplerSection(BaseModel):
    resampler: Resampler = Field(default=Resampler.SYSTEMATIC, description="重采样方法")
    max_iterations: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1, description="迭代上限")
    final_ess_target: Optional[float] = Field(default=None, gt=0.0, description="PS在β=1后的持久ESS目标")


class CalibrationSection(BaseModel):
    pilot_runs: int = Field(default=10, ge=1, description="每个探测点的试运行次数")
    tolerance: float = Field(default=0.01, gt=0.0, description="成本相对误差容限")
    max_probes: int = Field(default=25, ge=1, description="二分探测次数上限")


class OutputSection(BaseModel):
    dir: str = Field(default="results", description="报告输出目录")


class ExperimentSpec(BaseModel):
    """一次对比实验：目标 × 方法 × (N, k) 网格 × L 次重复"""
    model_config = ConfigDict(extra="forbid")

    target: TargetSection
    methods: List[Method] = Field(default=[Method.SMC, Method.RSMC, Method.PS, Method.WFSMC])
    grid: GridSection = Field(default_factory=GridSection)
    replicates: int = Field(default=50, ge=1, description="每个配置的重复次数 L")
    seed: int = Field(default=0, ge=0, description="根种子")
    alpha: Dict[Method, Union[float, str]] = Field(
        default_factory=dict,
        description="各方法的ESS阈值；PS/WFSMC 可写 auto 表示按成本标定",
    )
    reference: ReferenceSection = Field(default_factory=ReferenceSection)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("methods", mode="before")
    @classmethod
    def parse_methods(cls, v):
        if isinstance(v, str):
            v = [v]
        return [Method.parse(m) for m in v]

    @field_validator("alpha", mode="before")
    @classmethod
    def parse_alpha_keys(cls, v):
        return {Method.parse(key): value for key, value in (v or {}).items()}

    @model_validator(mode="after")
    def fill_alpha(self) -> "ExperimentSpec":
        if not self.methods:
            raise ValueError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")

        defaults = {
            Method.SMC: BASELINE_ALPHA,
            Method.RSMC: BASELINE_ALPHA,
            Method.PS: AUTO,
            Method.WFSMC: AUTO,
        }
        merged = {method: self.alpha.get(method, defaults[method]) for method in Method}
        for method, value in merged.items():
            if isinstance(value, str):
                if value.lower() != AUTO or method in (Method.SMC, Method.RSMC):
                    raise ValueError(f"alpha for {method.value} must be a number, got {value!r}")
                merged[method] = AUTO
                continue
            value = float(value)
            if value <= 0.0:
                raise ValueError(f"alpha for {method.value} must be positive")
            if method != Method.PS and value >= 1.0:
                raise ValueError(f"alpha for {method.value} must lie in (0, 1), got {value}")
            merged[method] = value
        self.alpha = merged
        return self

    @property
    def baseline_alpha(self) -> float:
        return float(self.alpha[Method.SMC])

    def needs_calibration(self, method: Method) -> bool:
        return self.alpha.get(method) == AUTO


def load_experiment_spec(path: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
    """
    读取并校验YAML实验配置

    参数:
        path: 配置文件路径
        overrides: 顶层字段覆盖（命令行参数），值为 None 的项忽略

    返回:
        ExperimentSpec
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "out":
            raw.setdefault("output", {})["dir"] = value
        else:
            raw[key] = value

    try:
        spec = ExperimentSpec.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config {path}:\n{e}") from e
    logger.info(f"✅ 已加载实验配置: {path} (目标={spec.target.name}, 方法={[m.value for m in spec.methods]})")
    return spec
