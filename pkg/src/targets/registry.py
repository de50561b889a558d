"""
目标注册表
按名称构造目标，并为 list-targets 提供元数据
"""

import logging
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from config import Config
from targets.base import Target
from targets.conjugate import ConjugateGaussianTarget
from targets.funnel import N_PARAMS as FUNNEL_DIM, FunnelTarget, load_funnel_data
from targets.gaussian_mixture import GaussianMixtureTarget
from targets.german_credit import N_PARAMS as CREDIT_DIM, HorseshoeLogisticTarget, load_german_credit
from targets.rosenbrock import RosenbrockTarget
from utils.error_handler import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TargetInfo:
    """目标元数据（不需要加载数据集）"""
    name: str
    dim: int
    description: str
    has_analytic: bool


def _build_conjugate(dim: int = 4, **_) -> Target:
    return ConjugateGaussianTarget(int(dim))


def _build_mixture(**_) -> Target:
    return GaussianMixtureTarget()


def _build_rosenbrock(**_) -> Target:
    return RosenbrockTarget()


def _build_german_credit(path: Optional[str] = None, config: Optional[Config] = None, **_) -> Target:
    # 路径优先级：显式参数 > GERMAN_CREDIT_PATH > assets/ 默认
    config = config or Config()
    resolved = path or config.german_credit_path
    return HorseshoeLogisticTarget(load_german_credit(resolved))


def _build_funnel(data_path: Optional[str] = None, config: Optional[Config] = None, **_) -> Target:
    config = config or Config()
    resolved = data_path or config.funnel_data_path
    return FunnelTarget(load_funnel_data(resolved))


_BUILDERS: Dict[str, Callable[..., Target]] = {
    ConjugateGaussianTarget.name: _build_conjugate,
    GaussianMixtureTarget.name: _build_mixture,
    RosenbrockTarget.name: _build_rosenbrock,
    HorseshoeLogisticTarget.name: _build_german_credit,
    FunnelTarget.name: _build_funnel,
}

_INFO: Dict[str, TargetInfo] = {
    ConjugateGaussianTarget.name: TargetInfo(
        ConjugateGaussianTarget.name, 4, ConjugateGaussianTarget.description, True),
    GaussianMixtureTarget.name: TargetInfo(
        GaussianMixtureTarget.name, 16, GaussianMixtureTarget.description, True),
    RosenbrockTarget.name: TargetInfo(
        RosenbrockTarget.name, 16, RosenbrockTarget.description, False),
    HorseshoeLogisticTarget.name: TargetInfo(
        HorseshoeLogisticTarget.name, CREDIT_DIM, HorseshoeLogisticTarget.description, False),
    FunnelTarget.name: TargetInfo(
        FunnelTarget.name, FUNNEL_DIM, FunnelTarget.description, True),
}


def target_names() -> List[str]:
    return list(_BUILDERS)


def list_targets() -> List[TargetInfo]:
    return [_INFO[name] for name in _BUILDERS]


def build_target(name: str, **options) -> Target:
    """
    按名称构造目标

    参数:
        name: 目标名称（见 target_names()）
        options: 目标相关选项，如 dim、path、data_path、config

    返回:
        Target 实例
    """
    builder = _BUILDERS.get(name)
    if builder is None:
        raise ConfigError(f"unknown target {name!r}; available: {', '.join(_BUILDERS)}")
    target = builder(**options)
    logger.debug(f"构造目标 {name} (dim={target.dim})")
    return target


def dataset_available(name: str, config: Optional[Config] = None) -> bool:
    """German credit 需要手动获取数据文件，其余目标总是可用"""
    if name != HorseshoeLogisticTarget.name:
        return True
    config = config or Config()
    return os.path.exists(config.german_credit_path)
