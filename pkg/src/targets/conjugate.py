"""
共轭高斯目标：先验 N(0, I_d)，似然 N(θ | 0, I_d)
解析 log Z = -(d/2)·ln(4π)，后验 N(0, ½·I_d)
"""

import numpy as np

from core.rng import RngStream
from targets.base import AnalyticSummary, Target

LOG_2PI = np.log(2.0 * np.pi)


class ConjugateGaussianTarget(Target):
    """用于检验证据估计一致性与偏差的解析目标"""

    name = "conjugate_gaussian"
    description = "N(0, I) prior with N(theta | 0, I) likelihood (analytic evidence)"

    def __init__(self, dim: int = 4):
        super().__init__(dim)
        self._analytic = AnalyticSummary(
            log_z=-0.5 * dim * np.log(4.0 * np.pi),
            mean=np.zeros(dim),
            second_moment=np.full(dim, 0.5),
            fourth_moment=np.full(dim, 0.75),
        )

    @property
    def analytic(self) -> AnalyticSummary:
        return self._analytic

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return -0.5 * self.dim * LOG_2PI - 0.5 * np.sum(thetas ** 2, axis=1)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return -0.5 * self.dim * LOG_2PI - 0.5 * np.sum(thetas ** 2, axis=1)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return rng.normal((count, self.dim))


def conjugate_gaussian_target(d: int) -> ConjugateGaussianTarget:
    """构造 d 维共轭高斯目标"""
    if d < 1:
        raise ValueError(f"d must be ≥ 1, got {d}")
    return ConjugateGaussianTarget(d)
