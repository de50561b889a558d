"""
确定性随机数流
(root_seed, replicate_id, purpose_tag) 三元组 → 独立且可复现的子流
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Tuple

import numpy as np

SEED_MASK = (1 << 64) - 1


class StreamPurpose(IntEnum):
    """随机流用途标签"""
    SAMPLER = 0        # 一次采样运行的主流
    PRIOR = 1          # 先验抽样
    RESAMPLE = 2       # 重采样
    MOVE = 3           # MCMC移动（再按迭代、粒子细分）
    PILOT = 4          # 标定用的试运行
    REFERENCE = 5      # 参考运行
    DATA = 6           # 合成数据生成


@dataclass(frozen=True)
class RngStream:
    """
    单消费者随机流

    基于 numpy SeedSequence 的 spawn_key 构造：相同三元组（及子路径）
    产生逐位相同的序列，不同三元组产生统计独立的序列。
    """
    root_seed: int
    replicate_id: int
    purpose_tag: int
    path: Tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        keys = (self.replicate_id, int(self.purpose_tag), *self.path)
        if any(int(k) < 0 for k in keys):
            raise ValueError(f"stream keys must be nonnegative, got {keys}")
        sequence = np.random.SeedSequence(
            entropy=int(self.root_seed) & SEED_MASK,
            spawn_key=tuple(int(k) for k in keys),
        )
        object.__setattr__(self, "generator", np.random.Generator(np.random.PCG64(sequence)))

    def child(self, *keys: int) -> "RngStream":
        """派生子流（例如按迭代、粒子编号）"""
        return RngStream(
            self.root_seed,
            self.replicate_id,
            self.purpose_tag,
            self.path + tuple(int(k) for k in keys),
        )

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def integers(self, low: int, high: Optional[int] = None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size=size)


def make_stream(root_seed: int, replicate_id: int, purpose_tag: int) -> RngStream:
    """
    创建随机流

    参数:
        root_seed: 64位根种子
        replicate_id: 重复实验编号
        purpose_tag: 用途标签（方法标签、StreamPurpose 等）
    """
    return RngStream(root_seed, replicate_id, purpose_tag)
