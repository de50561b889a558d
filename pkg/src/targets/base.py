"""
目标分布抽象
Target：维度、对数先验、对数似然、先验抽样、可选的解析真值
CountingTarget：单次运行内的似然评估计数（按阶段分类）
"""

import logging
import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional

import numpy as np

from core.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalyticSummary:
    """解析真值：log Z、后验一阶、二阶、四阶矩（逐坐标）"""
    log_z: float
    mean: np.ndarray
    second_moment: np.ndarray
    fourth_moment: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.second_moment - self.mean ** 2, 0.0))

    @property
    def second_sd(self) -> np.ndarray:
        """θ² 的后验标准差"""
        return np.sqrt(np.maximum(self.fourth_moment - self.second_moment ** 2, 0.0))


class Target(ABC):
    """
    贝叶斯模型 π(θ)·L(θ)

    log_prior / log_likelihood 接受单个参数向量 (D,) 或批量 (M, D)，
    分别返回标量或长度 M 的向量。先验必须归一化，这样 Ẑ_T 才是边际似然。
    """

    name: str = "target"
    description: str = ""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be ≥ 1, got {dim}")
        self.dim = dim

    @abstractmethod
    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        """批量对数先验，输入 (M, D)"""

    @abstractmethod
    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        """批量对数似然，输入 (M, D)"""

    @abstractmethod
    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        """从先验独立抽取 count 个样本，返回 (count, D)"""

    @property
    def analytic(self) -> Optional[AnalyticSummary]:
        return None

    @property
    def has_analytic(self) -> bool:
        return self.analytic is not None

    def log_prior(self, theta):
        return self._evaluate(self._log_prior, theta)

    def log_likelihood(self, theta):
        return self._evaluate(self._log_likelihood, theta)

    def _evaluate(self, fn: Callable[[np.ndarray], np.ndarray], theta):
        arr = np.asarray(theta, dtype=float)
        single = arr.ndim == 1
        batch = arr[None, :] if single else arr
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ValueError(f"{self.name}: expected (M, {self.dim}) parameters, got {arr.shape}")
        values = np.asarray(fn(batch), dtype=float)
        return float(values[0]) if single else values


class CountingTarget(Target):
    """
    似然评估计数包装器

    每次运行创建一个；log_likelihood 按输入行数计数，并记入当前阶段。
    重加权/β求解/证据更新阶段应保持零计数。
    """

    def __init__(self, inner: Target):
        super().__init__(inner.dim)
        self.inner = inner
        self.name = inner.name
        self.description = inner.description
        self.likelihood_evals = 0
        self.evals_by_phase: Dict[str, int] = {}
        self._phase = "sample"
        self._lock = threading.Lock()

    @classmethod
    def wrap(cls, target: Target) -> "CountingTarget":
        return target if isinstance(target, cls) else cls(target)

    @property
    def analytic(self) -> Optional[AnalyticSummary]:
        return self.inner.analytic

    @property
    def current_phase(self) -> str:
        return self._phase

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        """临时切换计数阶段"""
        previous = self._phase
        self._phase = name
        try:
            yield
        finally:
            self._phase = previous

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return self.inner._log_prior(thetas)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        count = thetas.shape[0]
        with self._lock:
            self.likelihood_evals += count
            self.evals_by_phase[self._phase] = self.evals_by_phase.get(self._phase, 0) + count
        return self.inner._log_likelihood(thetas)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        return self.inner.sample_prior(rng, count)

    @classmethod
    def fresh(cls, target: Target) -> "CountingTarget":
        """为一次运行创建新的计数器（已包装的目标会先解包）"""
        inner = target.inner if isinstance(target, cls) else target
        return cls(inner)
