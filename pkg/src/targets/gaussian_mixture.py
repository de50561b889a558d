"""
16维双峰高斯混合目标
似然 (1/3)·N(θ | -5·1, I) + (2/3)·N(θ | +5·1, I)，先验 U(-10, 10)^16
"""

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm, truncnorm

from core.rng import RngStream
from targets.base import AnalyticSummary, Target

LOG_2PI = np.log(2.0 * np.pi)

MODE_LOCATION = 5.0
MODE_WEIGHTS = (1.0 / 3.0, 2.0 / 3.0)
PRIOR_HALF_WIDTH = 10.0


def _component_log_densities(thetas: np.ndarray) -> np.ndarray:
    """两个分量的对数密度（含混合权重），形状 (M, 2)"""
    dim = thetas.shape[1]
    norm_const = -0.5 * dim * LOG_2PI
    left = np.log(MODE_WEIGHTS[0]) + norm_const - 0.5 * np.sum((thetas + MODE_LOCATION) ** 2, axis=1)
    right = np.log(MODE_WEIGHTS[1]) + norm_const - 0.5 * np.sum((thetas - MODE_LOCATION) ** 2, axis=1)
    return np.stack([left, right], axis=1)


def mixture16_log_likelihood(theta) -> float:
    """
    单点混合似然

    参数:
        theta: 长度16的参数向量
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (16,):
        raise ValueError(f"expected a length-16 vector, got shape {theta.shape}")
    return float(logsumexp(_component_log_densities(theta[None, :]), axis=1)[0])


class GaussianMixtureTarget(Target):
    """双峰混合目标；两个峰距先验边界都至少5个标准差"""

    name = "gaussian_mixture"
    description = "16-d bimodal Gaussian mixture (weights 1/3, 2/3) under U(-10, 10) prior"

    def __init__(self, dim: int = 16):
        super().__init__(dim)
        self._log_box_density = -dim * np.log(2.0 * PRIOR_HALF_WIDTH)
        self._analytic = self._compute_analytic()

    def _compute_analytic(self) -> AnalyticSummary:
        # 每个分量在盒内的质量（两个分量对称，质量相同）
        mass = norm.cdf(PRIOR_HALF_WIDTH - MODE_LOCATION) - norm.cdf(-PRIOR_HALF_WIDTH - MODE_LOCATION)
        log_z = self._log_box_density + self.dim * np.log(mass)

        lo, hi = -PRIOR_HALF_WIDTH, PRIOR_HALF_WIDTH
        right = truncnorm(lo - MODE_LOCATION, hi - MODE_LOCATION, loc=MODE_LOCATION)
        left = truncnorm(lo + MODE_LOCATION, hi + MODE_LOCATION, loc=-MODE_LOCATION)
        first = MODE_WEIGHTS[0] * left.moment(1) + MODE_WEIGHTS[1] * right.moment(1)
        second = MODE_WEIGHTS[0] * left.moment(2) + MODE_WEIGHTS[1] * right.moment(2)
        fourth = MODE_WEIGHTS[0] * left.moment(4) + MODE_WEIGHTS[1] * right.moment(4)
        return AnalyticSummary(
            log_z=float(log_z),
            mean=np.full(self.dim, first),
            second_moment=np.full(self.dim, second),
            fourth_moment=np.full(self.dim, fourth),
        )

    @property
    def analytic(self) -> AnalyticSummary:
        return self._analytic

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        inside = np.all(np.abs(thetas) <= PRIOR_HALF_WIDTH, axis=1)
        return np.where(inside, self._log_box_density, -np.inf)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return logsumexp(_component_log_densities(thetas), axis=1)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return rng.uniform((count, self.dim)) * 2.0 * PRIOR_HALF_WIDTH - PRIOR_HALF_WIDTH
