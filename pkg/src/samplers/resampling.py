"""
重采样：从 M 个加权粒子中抽取 N 个索引（M 可以大于 N）
"""

from typing import Callable, Dict

import numpy as np

from core.logspace import validate_probability_vector
from core.rng import RngStream
from samplers.config import Resampler

RESAMPLE_TOLERANCE = 1e-9


def _cumulative(weights) -> np.ndarray:
    w = validate_probability_vector(weights, tolerance=RESAMPLE_TOLERANCE)
    cumulative = np.cumsum(w)
    cumulative /= cumulative[-1]
    return cumulative


def _check_count(count: int) -> None:
    if count < 1:
        raise ValueError(f"count must be ≥ 1, got {count}")


def resample_multinomial(weights, count: int, rng: RngStream) -> np.ndarray:
    """独立同分布的类别抽样"""
    _check_count(count)
    cumulative = _cumulative(weights)
    u = rng.uniform(count)
    return np.minimum(np.searchsorted(cumulative, u, side="right"), cumulative.size - 1)


def resample_systematic(weights, count: int, rng: RngStream) -> np.ndarray:
    """
    系统重采样：单个 u ~ U[0,1)，分层点 (u + j)/N 对照累计权重阶梯
    """
    _check_count(count)
    cumulative = _cumulative(weights)
    positions = (rng.uniform() + np.arange(count)) / count
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), cumulative.size - 1)


RESAMPLERS: Dict[Resampler, Callable[..., np.ndarray]] = {
    Resampler.SYSTEMATIC: resample_systematic,
    Resampler.MULTINOMIAL: resample_multinomial,
}


def get_resampler(kind) -> Callable[..., np.ndarray]:
    return RESAMPLERS[Resampler(kind)]
