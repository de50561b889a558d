"""
按方法分派采样循环
"""

from typing import Callable, Dict

from core.rng import RngStream
from samplers.config import Method, RunConfig
from samplers.persistent import run_ps
from samplers.results import RunResult
from samplers.smc import run_smc
from samplers.waste_free import run_wfsmc
from targets.base import Target

_LOOPS: Dict[Method, Callable[[Target, RunConfig, RngStream], RunResult]] = {
    Method.SMC: run_smc,
    Method.RSMC: run_smc,
    Method.PS: run_ps,
    Method.WFSMC: run_wfsmc,
}


def run_sampler(target: Target, config: RunConfig, rng: RngStream) -> RunResult:
    """RSMC 与 SMC 共用采样循环，完整历史保存在 final_store 中"""
    return _LOOPS[config.method](target, config, rng)
