"""
后验一阶矩、二阶矩估计

- SMC：最后一代等权平均
- WFSMC：最后一次扫描的全部 k·N 个状态等权平均
- RSMC：所有代的回收权重
- PS：β=1 下全部持久粒子的权重
"""

from dataclasses import dataclass

import numpy as np

from core.containers import Generation, PersistentStore
from core.logspace import normalize_log_weights
from estimators.recycling import recycle_weights
from samplers.config import Method
from samplers.results import RunResult
from samplers.weights import ps_log_weights


@dataclass(frozen=True)
class MomentEstimate:
    """逐坐标的 E[θ] 与 E[θ²]"""
    first: np.ndarray
    second: np.ndarray
    method: Method
    weights_used: str

    @property
    def variance(self) -> np.ndarray:
        return self.second - self.first ** 2


def weighted_moments(particles: np.ndarray, weights: np.ndarray):
    particles = np.asarray(particles, dtype=float)
    return weights @ particles, weights @ particles ** 2


def moments_standard(final_gen: Generation, method: Method = Method.SMC) -> MomentEstimate:
    """最后一代的等权平均"""
    particles = final_gen.particles
    return MomentEstimate(
        first=particles.mean(axis=0),
        second=(particles ** 2).mean(axis=0),
        method=method,
        weights_used="uniform",
    )


def moments_recycled(store: PersistentStore) -> MomentEstimate:
    weights, _ = normalize_log_weights(recycle_weights(store))
    first, second = weighted_moments(store.flat_particles(), weights)
    return MomentEstimate(first, second, Method.RSMC, "recycled")


def moments_persistent(store: PersistentStore) -> MomentEstimate:
    """β=1 下对全部已完成代重新计算的持久权重（不重采样）"""
    weights, _ = normalize_log_weights(ps_log_weights(store, 1.0))
    first, second = weighted_moments(store.flat_particles(), weights)
    return MomentEstimate(first, second, Method.PS, "persistent")


def estimate_moments(result: RunResult) -> MomentEstimate:
    """按方法选择对应的估计器"""
    if result.method == Method.PS:
        return moments_persistent(result.final_store)
    if result.method == Method.RSMC:
        return moments_recycled(result.final_store)
    if result.method == Method.WFSMC and result.final_pool is not None:
        return moments_standard(result.final_pool, Method.WFSMC)
    return moments_standard(result.final_store.last, result.method)
