"""
采样运行结果
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from core.containers import Generation, PersistentStore
from samplers.config import Method


@dataclass
class RunResult:
    """
    final_store: 所有代（SMC只需最后一代，这里统一保留全部历史）
    log_z_trace: 每次迭代的 log Ẑ_t
    beta_schedule: β 序列，正常结束时以 1.0 结尾
    likelihood_evals: 似然评估总数（初始先验样本 + 全部扫描）
    acceptance_trace: 每次扫描的平均接受率
    iterations: 迭代次数 T（即代数）
    """
    method: Method
    final_store: PersistentStore
    log_z_trace: np.ndarray
    beta_schedule: np.ndarray
    likelihood_evals: int
    acceptance_trace: np.ndarray
    iterations: int
    complete: bool = True
    final_generation: Optional[Generation] = None
    # WFSMC：最后一次扫描记录的 k·N 个状态
    final_pool: Optional[Generation] = None
    evals_by_phase: Dict[str, int] = field(default_factory=dict)

    @property
    def log_z(self) -> float:
        """最终的证据估计 log Ẑ_T"""
        return float(self.log_z_trace[-1])

    @property
    def reweight_evals(self) -> int:
        """重加权/β求解/证据更新阶段的似然评估次数（应为0）"""
        return self.evals_by_phase.get("reweight", 0)
