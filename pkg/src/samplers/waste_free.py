"""
Waste-free SMC

池由上一次扫描中每条链的全部 k 个中间状态组成（M = k·N），
重加权后与 α·N 比较求 β，再从 M 中重采样 N 条链的起点
"""

import logging
from typing import List

from core.containers import PersistentStore
from core.logspace import normalize_log_weights
from core.rng import RngStream, StreamPurpose
from kernels.rwm import RwmState, adapt_scale, refresh_covariance, rwm_sweep
from samplers.config import Method, RunConfig
from samplers.resampling import get_resampler
from samplers.results import RunResult
from samplers.smc import REWEIGHT_PHASE, finish_run, initial_generation, iteration_cap_reached
from samplers.tempering import solve_next_beta
from samplers.weights import smc_log_weights
from targets.base import CountingTarget, Target

logger = logging.getLogger(__name__)


def run_wfsmc(target: Target, config: RunConfig, rng: RngStream) -> RunResult:
    """
    Waste-free SMC 主循环

    参数:
        target: 目标分布
        config: 运行配置（method 为 WFSMC）
        rng: 本次运行的随机流

    返回:
        RunResult，final_pool 为最后一次扫描的 k·N 个状态
    """
    if config.method != Method.WFSMC:
        raise ValueError(f"run_wfsmc cannot run method {config.method.value}")

    counted = CountingTarget.fresh(target)
    n = config.n_particles
    resample = get_resampler(config.resampler)

    pool = initial_generation(counted, rng, n)
    store = PersistentStore(pool)
    state = RwmState.initial(pool.dim)
    log_z = 0.0
    log_z_trace = [0.0]
    acceptance: List[float] = []
    complete = True

    while pool.beta < 1.0:
        if iteration_cap_reached(store, config):
            complete = False
            break
        t = len(store) + 1

        with counted.phase(REWEIGHT_PHASE):
            current = pool
            beta = solve_next_beta(
                lambda b: smc_log_weights(current, b), current.beta, config.ess_alpha, n
            )
            weights, log_mean = normalize_log_weights(smc_log_weights(current, beta))
            log_z += log_mean

        indices = resample(weights, n, rng.child(StreamPurpose.RESAMPLE, t))
        starts = pool.take(indices)

        state = refresh_covariance(state, pool.particles, weights)
        with counted.phase("move"):
            sweep = rwm_sweep(
                starts, counted, beta, state, config.mcmc_steps,
                rng.child(StreamPurpose.MOVE, t), record_chain=True, workers=config.workers,
            )
        state = adapt_scale(state, sweep.mean_acceptance)

        pool = sweep.trajectory
        store.append(sweep.generation, log_z)
        log_z_trace.append(log_z)
        acceptance.append(sweep.mean_acceptance)
        logger.debug(
            f"WFSMC t={t}: β={beta:.6g}, log Ẑ={log_z:.4f}, 池大小={pool.n_particles}, "
            f"接受率={sweep.mean_acceptance:.3f}"
        )

    return finish_run(config.method, counted, store, log_z_trace, acceptance, complete, final_pool=pool)
