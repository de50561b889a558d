"""
测试公共夹具
"""

import os
import sys

import numpy as np
import pytest

SRC_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if SRC_DIR not in sys.path:
    sys.path.insert(0, SRC_DIR)

from core.rng import RngStream  # noqa: E402
from targets.base import Target  # noqa: E402
from targets.conjugate import ConjugateGaussianTarget  # noqa: E402


class ConstantLikelihoodTarget(Target):
    """log L ≡ c，先验 N(0, I)"""

    name = "constant"

    def __init__(self, dim: int = 2, constant: float = -1.5):
        super().__init__(dim)
        self.constant = constant

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return -0.5 * self.dim * np.log(2.0 * np.pi) - 0.5 * np.sum(thetas ** 2, axis=1)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return np.full(thetas.shape[0], self.constant)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return rng.normal((count, self.dim))


class UniformBoxTarget(Target):
    """先验 U(-1, 1)^d，似然恒为0"""

    name = "uniform_box"

    def __init__(self, dim: int = 2):
        super().__init__(dim)

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        inside = np.all(np.abs(thetas) <= 1.0, axis=1)
        return np.where(inside, -self.dim * np.log(2.0), -np.inf)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return np.zeros(thetas.shape[0])

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return 2.0 * rng.uniform((count, self.dim)) - 1.0


@pytest.fixture
def conjugate4():
    return ConjugateGaussianTarget(4)


@pytest.fixture
def constant_target():
    return ConstantLikelihoodTarget()


@pytest.fixture
def uniform_box():
    return UniformBoxTarget()


def write_credit_file(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write("   ".join(str(v) for v in row) + "\n")


@pytest.fixture
def credit_rows():
    """合成的 1000×25 整数数据（标签为1或2）"""
    gen = np.random.default_rng(11)
    covariates = gen.integers(0, 10, size=(1000, 24))
    labels = gen.integers(1, 3, size=(1000, 1))
    return np.hstack([covariates, labels]).tolist()
