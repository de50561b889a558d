"""
粒子容器
Generation：单次迭代的粒子矩阵 + 缓存的对数似然 + 温度
PersistentStore：所有历史代 + 温度序列 + 每次迭代的 log Z 估计
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from utils.error_handler import CorruptEvidenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Generation:
    """
    一代粒子

    particles: N×D 参数矩阵
    log_like: 长度N的缓存 log L(θ)
    beta: 温度 β ∈ [0, 1]
    """
    particles: np.ndarray
    log_like: np.ndarray
    beta: float

    def __post_init__(self):
        particles = np.asarray(self.particles, dtype=float)
        if particles.ndim == 1:
            particles = particles[:, None]
        log_like = np.asarray(self.log_like, dtype=float).ravel()

        if particles.ndim != 2 or particles.shape[0] < 1 or particles.shape[1] < 1:
            raise ValueError(f"particles must be N×D with N, D ≥ 1, got shape {particles.shape}")
        if log_like.size != particles.shape[0]:
            raise ValueError(
                f"log_like length {log_like.size} does not match {particles.shape[0]} particles"
            )
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "log_like", log_like)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    def take(self, indices: np.ndarray) -> "Generation":
        """按索引选取粒子（重采样后使用），缓存随粒子一起移动"""
        return Generation(self.particles[indices], self.log_like[indices], self.beta)

    def with_beta(self, beta: float) -> "Generation":
        return Generation(self.particles, self.log_like, beta)


class PersistentStore:
    """
    持久粒子仓库

    按迭代顺序保存所有 Generation，以及对应的 β_s 和 log Ẑ_s。
    约定 betas[0] = 0、log_z_estimates[0] = 0（先验已归一化）。
    """

    def __init__(self, first: Optional[Generation] = None, strict: bool = True):
        self.strict = strict
        self.generations: List[Generation] = []
        self.betas: List[float] = []
        self.log_z_estimates: List[float] = []
        if first is not None:
            self.append(first, 0.0)

    def append(self, generation: Generation, log_z: float) -> None:
        """
        追加一代

        参数:
            generation: 新的一代粒子（其温度即 β_s）
            log_z: 该温度下的 log Ẑ_s 估计
        """
        if not self.generations:
            # 非严格模式用于构造合成仓库（例如全部位于 β=1 的历史）
            if self.strict and generation.beta != 0.0:
                raise ValueError("the first generation must be drawn at beta = 0")
            if self.strict and log_z != 0.0:
                raise ValueError("the first evidence estimate must be log Z = 0")
        else:
            if generation.beta < self.betas[-1]:
                raise ValueError(
                    f"betas must be nondecreasing ({generation.beta} < {self.betas[-1]})"
                )
            if generation.dim != self.dim:
                raise ValueError("particle dimension changed within a run")

        self.generations.append(generation)
        self.betas.append(generation.beta)
        self.log_z_estimates.append(float(log_z))

    def __len__(self) -> int:
        return len(self.generations)

    def __iter__(self) -> Iterator[Generation]:
        return iter(self.generations)

    @property
    def dim(self) -> int:
        return self.generations[0].dim

    @property
    def last(self) -> Generation:
        return self.generations[-1]

    def beta_array(self) -> np.ndarray:
        return np.asarray(self.betas, dtype=float)

    def log_z_array(self, check: bool = True) -> np.ndarray:
        """
        返回 log Ẑ_s 序列

        参数:
            check: 是否检查所有值有限
        """
        log_z = np.asarray(self.log_z_estimates, dtype=float)
        if check and not np.all(np.isfinite(log_z)):
            raise CorruptEvidenceError("corrupt evidence history")
        return log_z

    def log_like_matrix(self) -> np.ndarray:
        """所有代的缓存对数似然，形状 (代数, N)；要求每代粒子数相同"""
        return np.vstack([g.log_like for g in self.generations])

    def flat_log_like(self) -> np.ndarray:
        """按 (t′, i) 顺序展平的缓存对数似然"""
        return np.concatenate([g.log_like for g in self.generations])

    def flat_particles(self) -> np.ndarray:
        """按 (t′, i) 顺序展平的粒子矩阵，形状 (总粒子数, D)"""
        return np.vstack([g.particles for g in self.generations])

    def total_particles(self) -> int:
        return sum(g.n_particles for g in self.generations)

    def truncated(self, count: int) -> "PersistentStore":
        """只保留前 count 代的副本"""
        store = PersistentStore(strict=self.strict)
        for generation, log_z in zip(self.generations[:count], self.log_z_estimates[:count]):
            store.append(generation, log_z)
        return store
