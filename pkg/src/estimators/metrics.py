"""
评估指标：log Z 的均方误差、最大平方偏差
"""

import numpy as np


def mse_log_z(estimates, reference: float) -> float:
    """
    (1/L)·Σ (log Ẑ_ℓ − log Z_ref)²

    参数:
        estimates: L 次运行的 log Ẑ
        reference: 参考值 log Z_ref
    """
    estimates = np.asarray(estimates, dtype=float).ravel()
    if estimates.size == 0:
        raise ValueError("mse_log_z needs at least one estimate")
    return float(np.mean((estimates - reference) ** 2))


def max_squared_bias(per_run_estimates, ref_mean, ref_sd) -> float:
    """
    b² = max_d [(mean_ℓ est[ℓ, d] − ref_mean[d]) / ref_sd[d]]²

    参数:
        per_run_estimates: L×D 矩阵，每行一次运行的矩估计
        ref_mean: 参考均值（长度D）
        ref_sd: 参考标准差（长度D，必须为正）
    """
    ref_sd = np.asarray(ref_sd, dtype=float)
    if np.any(ref_sd <= 0.0):
        raise ValueError("ref_sd must be positive in every coordinate")
    estimates = np.atleast_2d(np.asarray(per_run_estimates, dtype=float))
    bias = (estimates.mean(axis=0) - np.asarray(ref_mean, dtype=float)) / ref_sd
    return float(np.max(bias ** 2))
