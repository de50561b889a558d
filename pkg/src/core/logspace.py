"""
对数域数值基础
log-sum-exp、对数权重归一化、有效样本量（ESS）
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import logsumexp

from utils.error_handler import (
    DegenerateWeightsError,
    EmptyInputError,
    InvalidWeightsError,
)

logger = logging.getLogger(__name__)

# 归一化权重之和允许的误差
WEIGHT_SUM_TOLERANCE = 1e-8


@dataclass(frozen=True)
class LogWeights:
    """
    未归一化的对数权重向量

    允许 -inf（零权重），不允许 NaN 或 +inf。
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            values = values.ravel()
        if values.size == 0:
            raise EmptyInputError("empty log-weights")
        if np.isnan(values).any():
            raise InvalidWeightsError("log-weights contain NaN")
        if np.isposinf(values).any():
            raise InvalidWeightsError("log-weights contain +inf")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def shifted(self, constant: float) -> "LogWeights":
        return LogWeights(self.values + constant)


LogWeightsLike = Union[LogWeights, np.ndarray, list]


def _as_values(logw: LogWeightsLike) -> np.ndarray:
    if isinstance(logw, LogWeights):
        return logw.values
    return LogWeights(np.asarray(logw, dtype=float)).values


def log_sum_exp(values) -> float:
    """
    计算 log Σ exp(values[i])，由 scipy.special.logsumexp 完成

    参数:
        values: 对数域实数向量

    返回:
        对数域实数；所有输入为 -inf 时返回 -inf
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInputError("empty log-sum-exp")
    if np.isnan(arr).any():
        raise InvalidWeightsError("log-sum-exp input contains NaN")

    if np.isneginf(arr).all():
        return -np.inf
    return float(logsumexp(arr))


def normalize_log_weights(logw: LogWeightsLike) -> Tuple[np.ndarray, float]:
    """
    归一化对数权重

    参数:
        logw: 未归一化的对数权重

    返回:
        (概率向量, log_mean)，其中 log_mean = log_sum_exp(logw) - log M
    """
    values = _as_values(logw)
    total = log_sum_exp(values)
    if np.isneginf(total):
        raise DegenerateWeightsError("degenerate weights")

    weights = np.exp(values - total)
    weights /= weights.sum()
    log_mean = total - np.log(values.size)
    return weights, float(log_mean)


def validate_probability_vector(weights, tolerance: float = WEIGHT_SUM_TOLERANCE) -> np.ndarray:
    """检查权重非负、有限且和为1"""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise EmptyInputError("empty weight vector")
    if not np.all(np.isfinite(w)) or (w < 0).any():
        raise InvalidWeightsError("weights must be finite and nonnegative")
    total = w.sum()
    if total == 0.0:
        raise InvalidWeightsError("zero weight vector")
    if abs(total - 1.0) > tolerance:
        raise InvalidWeightsError(f"weights are not normalized (sum={total!r})")
    return w


def ess(weights) -> float:
    """
    有效样本量 1 / Σ W_i²（归一化权重形式）

    参数:
        weights: 归一化概率向量

    返回:
        ESS，取值范围 (0, M]
    """
    w = validate_probability_vector(weights)
    return float(1.0 / np.sum(w * w))


def ess_unnormalized(weights) -> float:
    """有效样本量 (Σ w_i)² / Σ w_i²（未归一化权重形式）"""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise EmptyInputError("empty weight vector")
    if not np.all(np.isfinite(w)) or (w < 0).any():
        raise InvalidWeightsError("weights must be finite and nonnegative")
    total = w.sum()
    if total == 0.0:
        raise InvalidWeightsError("zero weight vector")
    return float(total * total / np.sum(w * w))


def ess_from_log_weights(logw: LogWeightsLike) -> float:
    """由对数权重直接计算ESS"""
    weights, _ = normalize_log_weights(logw)
    return ess(weights)


def log_mean_exp(values, axis=None):
    """log( mean(exp(values)) )，沿指定轴"""
    arr = np.asarray(values, dtype=float)
    count = arr.size if axis is None else arr.shape[axis]
    return logsumexp(arr, axis=axis) - np.log(count)


def tempered(beta: float, log_like: np.ndarray) -> np.ndarray:
    """
    β·log L，约定 β=0 时结果为 0（L^0 = 1，即使 L = 0）
    """
    log_like = np.asarray(log_like, dtype=float)
    if beta == 0.0:
        return np.zeros_like(log_like)
    return beta * log_like
