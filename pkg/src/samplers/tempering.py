"""
自适应温度：二分法求解下一个 β，使 ESS(β) = α·N
"""

import logging
from typing import Callable

from core.logspace import LogWeights, ess_from_log_weights
from utils.error_handler import DegenerateWeightsError

logger = logging.getLogger(__name__)

BETA_TOLERANCE = 1e-10
MAX_BISECTIONS = 60
# 比较 ESS 与阈值时的相对容差（均匀权重的 ESS 可能因舍入略小于 M）
ESS_RELATIVE_SLACK = 1e-12


def _ess_at(weight_fn: Callable[[float], LogWeights], beta: float) -> float:
    try:
        return ess_from_log_weights(weight_fn(beta))
    except DegenerateWeightsError:
        return 0.0


def solve_next_beta(
    weight_fn: Callable[[float], LogWeights],
    beta_prev: float,
    alpha: float,
    n_particles: int,
) -> float:
    """
    求下一个温度

    ESS(β) 关于 β 单调不增：
    - ESS(1) ≥ α·N 时直接返回 1.0
    - ESS(β_prev) < α·N 时返回 β_prev（PS 初期 β 会停留在0）
    - 否则二分到绝对误差 1e-10，返回满足 ESS ≥ α·N 的一端

    参数:
        weight_fn: β → 对数权重（只使用缓存似然）
        beta_prev: 上一个温度
        alpha: ESS阈值（相对于 N）
        n_particles: N
    """
    threshold = alpha * n_particles * (1.0 - ESS_RELATIVE_SLACK)

    if _ess_at(weight_fn, 1.0) >= threshold:
        return 1.0
    if _ess_at(weight_fn, beta_prev) < threshold:
        logger.debug(f"ESS(β_prev={beta_prev:.6g}) < α·N={threshold:.4g}，β保持不变")
        return beta_prev

    lo, hi = beta_prev, 1.0
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= BETA_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        if _ess_at(weight_fn, mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return lo
