"""
重加权：SMC增量权重与持久采样（PS）的混合权重
只使用缓存的对数似然，不会产生新的似然评估
"""

import numpy as np
from scipy.special import logsumexp

from core.containers import Generation, PersistentStore
from core.logspace import LogWeights, LogWeightsLike, ess, ess_unnormalized, normalize_log_weights, tempered


def smc_log_weights(gen: Generation, beta_new: float) -> LogWeights:
    """
    SMC增量权重 logw_i = (β_new − β)·log L(θ_i)

    参数:
        gen: 当前一代（温度 β）
        beta_new: 新温度，β_new ≥ β
    """
    if beta_new < gen.beta:
        raise ValueError(f"beta_new {beta_new} is below the generation temperature {gen.beta}")
    return LogWeights(tempered(beta_new - gen.beta, gen.log_like))


def mixture_log_denominator(
    log_like: np.ndarray,
    betas: np.ndarray,
    log_z: np.ndarray,
) -> np.ndarray:
    """
    混合密度的对数分母 log[(1/S) Σ_s exp(β_s·log L − log Ẑ_s)]

    参数:
        log_like: 展平后的缓存对数似然，长度M
        betas: 各分量温度，长度S
        log_z: 各分量证据估计，长度S

    返回:
        长度M的向量
    """
    log_like = np.asarray(log_like, dtype=float)
    betas = np.asarray(betas, dtype=float)
    log_z = np.asarray(log_z, dtype=float)
    with np.errstate(invalid="ignore"):
        # β_s = 0 的分量恒为 L^0 = 1
        scaled = np.where(betas[:, None] == 0.0, 0.0, betas[:, None] * log_like[None, :])
    return logsumexp(scaled - log_z[:, None], axis=0) - np.log(betas.size)


def ps_log_denominator(store: PersistentStore) -> np.ndarray:
    """持久仓库中所有粒子的混合分母；与 β_new 无关，每次迭代只需计算一次"""
    if len(store) == 0:
        raise ValueError("persistent store is empty")
    return mixture_log_denominator(store.flat_log_like(), store.beta_array(), store.log_z_array())


def ps_weights_from_denominator(log_like: np.ndarray, denominator: np.ndarray, beta_new: float) -> LogWeights:
    return LogWeights(tempered(beta_new, log_like) - denominator)


def ps_log_weights(store: PersistentStore, beta_new: float) -> LogWeights:
    """
    持久粒子权重（展平为 (t−1)·N 个）

    logw = β_new·log L(θ) − log[(1/(t−1)) Σ_s exp(β_s·log L(θ) − log Ẑ_s)]

    参数:
        store: 已完成的 t−1 代
        beta_new: 新温度
    """
    denominator = ps_log_denominator(store)
    return ps_weights_from_denominator(store.flat_log_like(), denominator, beta_new)


def persistent_ess(logw: LogWeightsLike, normalized: bool = True) -> float:
    """
    持久粒子的有效样本量

    参数:
        logw: 展平的未归一化对数权重
        normalized: True 用 1/ΣW²，False 用 (Σw)²/Σw²
    """
    values = logw.values if isinstance(logw, LogWeights) else LogWeights(logw).values
    if normalized:
        weights, _ = normalize_log_weights(values)
        return ess(weights)
    # 减去最大值防止溢出
    top = values.max()
    return ess_unnormalized(np.exp(values - top))
