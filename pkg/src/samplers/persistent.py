"""
持久采样（Persistent Sampling, PS）

与SMC的区别：
- 所有历史代都保留下来，作为温度混合分布的近似样本一起重加权
- log Ẑ_t 每次迭代用全部持久粒子的权重均值重新计算（不是累乘）
- 从 (t−1)·N 个持久粒子中重采样 N 个，协方差由加权的持久粒子估计
- α 可以大于1；α ≥ t−1 或持久ESS不足 α·N 时 β 保持原值，β=0 时改为直接从先验独立抽样（前 ⌊α⌋+1 代）
"""

import logging
from typing import List

from core.containers import Generation, PersistentStore
from core.logspace import normalize_log_weights
from core.rng import RngStream, StreamPurpose
from kernels.rwm import RwmState, adapt_scale, refresh_covariance, rwm_sweep
from samplers.config import Method, Resampler, RunConfig
from samplers.resampling import get_resampler
from samplers.results import RunResult
from samplers.smc import REWEIGHT_PHASE, finish_run, initial_generation, iteration_cap_reached
from samplers.tempering import solve_next_beta
from samplers.weights import persistent_ess, ps_log_denominator, ps_log_weights, ps_weights_from_denominator
from targets.base import CountingTarget, Target

logger = logging.getLogger(__name__)


def run_ps(target: Target, config: RunConfig, rng: RngStream) -> RunResult:
    """
    持久采样主循环

    参数:
        target: 目标分布
        config: 运行配置（method 为 PS）
        rng: 本次运行的随机流

    返回:
        RunResult（final_store 保存全部持久代）
    """
    if config.method != Method.PS:
        raise ValueError(f"run_ps cannot run method {config.method.value}")

    counted = CountingTarget.fresh(target)
    n = config.n_particles
    resample = get_resampler(config.resampler)

    store = PersistentStore(initial_generation(counted, rng, n))
    state = RwmState.initial(store.dim)
    log_z_trace = [0.0]
    acceptance: List[float] = []
    complete = True

    while True:
        previous_beta = store.last.beta
        if previous_beta == 1.0 and config.final_ess_target is None:
            break
        if iteration_cap_reached(store, config):
            complete = False
            break
        t = len(store) + 1

        with counted.phase(REWEIGHT_PHASE):
            log_like = store.flat_log_like()
            denominator = ps_log_denominator(store)

            def weight_fn(b):
                return ps_weights_from_denominator(log_like, denominator, b)

            if previous_beta == 1.0:
                # β=1 之后的继续迭代：持久ESS达标即停止
                reached = persistent_ess(weight_fn(1.0))
                if reached >= config.final_ess_target:
                    logger.debug(f"PS: β=1 持久ESS={reached:.1f} 达到目标 {config.final_ess_target}")
                    break
                beta = 1.0
            elif config.ess_alpha >= len(store):
                # α 须小于已完成代数 t−1，否则 β 不动
                beta = previous_beta
            else:
                beta = solve_next_beta(weight_fn, previous_beta, config.ess_alpha, n)
            weights, log_z = normalize_log_weights(weight_fn(beta))

        if beta == 0.0:
            # β 停留在0：直接从先验独立抽样，代替MCMC移动
            with counted.phase("prior"):
                particles = counted.sample_prior(rng.child(StreamPurpose.PRIOR, t), n)
                gen = Generation(particles, counted.log_likelihood(particles), 0.0)
        else:
            pool = store.flat_particles()
            indices = resample(weights, n, rng.child(StreamPurpose.RESAMPLE, t))
            resampled = Generation(pool[indices], log_like[indices], previous_beta)

            # 协方差来自全部加权持久粒子
            state = refresh_covariance(state, pool, weights)
            with counted.phase("move"):
                sweep = rwm_sweep(
                    resampled, counted, beta, state, config.mcmc_steps,
                    rng.child(StreamPurpose.MOVE, t), workers=config.workers,
                )
            state = adapt_scale(state, sweep.mean_acceptance)
            gen = sweep.generation
            acceptance.append(sweep.mean_acceptance)

        store.append(gen, log_z)
        log_z_trace.append(log_z)
        logger.debug(
            f"PS t={t}: β={beta:.6g}, log Ẑ={log_z:.4f}, 持久粒子={store.total_particles()}, "
            f"尺度={state.global_scale:.4g}"
        )

    return finish_run(config.method, counted, store, log_z_trace, acceptance, complete)


def resample_persistent(
    store: PersistentStore,
    count: int,
    rng: RngStream,
    resampler: Resampler = Resampler.SYSTEMATIC,
) -> Generation:
    """
    从持久粒子中按 β=1 权重重采样出等权后验样本

    期望值仍应使用加权估计器，这里只为需要等权样本的场景
    """
    weights, _ = normalize_log_weights(ps_log_weights(store, 1.0))
    indices = get_resampler(resampler)(weights, count, rng)
    return Generation(store.flat_particles()[indices], store.flat_log_like()[indices], 1.0)
