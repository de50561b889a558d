"""
16维Rosenbrock目标
log L = -Σ_i [10(θ_{2i-1}² - θ_{2i})² + (θ_{2i-1} - 1)²]，先验 N(0, 25·I)
"""

import numpy as np

from core.rng import RngStream
from targets.base import Target

PRIOR_SD = 5.0


def _rosenbrock_batch(thetas: np.ndarray) -> np.ndarray:
    odd = thetas[:, 0::2]
    even = thetas[:, 1::2]
    return -np.sum(10.0 * (odd ** 2 - even) ** 2 + (odd - 1.0) ** 2, axis=1)


def rosenbrock16_log_likelihood(theta) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (16,):
        raise ValueError(f"expected a length-16 vector, got shape {theta.shape}")
    return float(_rosenbrock_batch(theta[None, :])[0])


class RosenbrockTarget(Target):
    """成对耦合的Rosenbrock似然；维度必须为偶数"""

    name = "rosenbrock"
    description = "16-d paired Rosenbrock log-likelihood under N(0, 25 I) prior"

    def __init__(self, dim: int = 16):
        if dim % 2:
            raise ValueError(f"Rosenbrock target needs an even dimension, got {dim}")
        super().__init__(dim)
        self._log_norm = -0.5 * dim * np.log(2.0 * np.pi * PRIOR_SD ** 2)

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return self._log_norm - 0.5 * np.sum(thetas ** 2, axis=1) / PRIOR_SD ** 2

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return _rosenbrock_batch(thetas)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return PRIOR_SD * rng.normal((count, self.dim))
