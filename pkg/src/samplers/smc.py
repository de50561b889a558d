"""
标准SMC（以及RSMC，两者采样循环相同，区别只在事后估计器）

每次迭代：二分求 β → 更新 log Ẑ → 从 N 中重采样 N → 估计协方差 → RWM 扫描 k 步 → 自适应尺度
"""

import logging
from typing import List, Tuple

import numpy as np

from core.containers import Generation, PersistentStore
from core.logspace import normalize_log_weights
from core.rng import RngStream, StreamPurpose
from kernels.rwm import RwmState, adapt_scale, refresh_covariance, rwm_sweep
from samplers.config import Method, RunConfig
from samplers.resampling import get_resampler
from samplers.results import RunResult
from samplers.tempering import solve_next_beta
from samplers.weights import smc_log_weights
from targets.base import CountingTarget, Target

logger = logging.getLogger(__name__)

REWEIGHT_PHASE = "reweight"


def initial_generation(target: CountingTarget, rng: RngStream, n_particles: int) -> Generation:
    """从先验抽取第一代（β=0）并缓存似然"""
    with target.phase("init"):
        particles = target.sample_prior(rng.child(StreamPurpose.PRIOR), n_particles)
        log_like = target.log_likelihood(particles)
    return Generation(particles, log_like, 0.0)


def iteration_cap_reached(store: PersistentStore, config: RunConfig) -> bool:
    if len(store) >= config.max_iterations:
        logger.warning(
            f"⚠️ {config.method.value}: 达到迭代上限 {config.max_iterations}，"
            f"β={store.last.beta:.6g}，结果标记为未完成"
        )
        return True
    return False


def finish_run(
    method: Method,
    target: CountingTarget,
    store: PersistentStore,
    log_z_trace: List[float],
    acceptance: List[float],
    complete: bool,
    **extra,
) -> RunResult:
    result = RunResult(
        method=method,
        final_store=store,
        log_z_trace=np.asarray(log_z_trace, dtype=float),
        beta_schedule=store.beta_array(),
        likelihood_evals=target.likelihood_evals,
        acceptance_trace=np.asarray(acceptance, dtype=float),
        iterations=len(store),
        complete=complete,
        final_generation=store.last,
        evals_by_phase=dict(target.evals_by_phase),
        **extra,
    )
    status = "✅" if complete else "⚠️"
    logger.info(
        f"{status} {method.value} 完成: T={result.iterations}, log Ẑ={result.log_z:.4f}, "
        f"似然评估={result.likelihood_evals}"
    )
    return result


def _reweight(gen: Generation, config: RunConfig) -> Tuple[float, np.ndarray, float]:
    beta = solve_next_beta(
        lambda b: smc_log_weights(gen, b), gen.beta, config.ess_alpha, config.n_particles
    )
    weights, log_mean = normalize_log_weights(smc_log_weights(gen, beta))
    return beta, weights, log_mean


def run_smc(target: Target, config: RunConfig, rng: RngStream) -> RunResult:
    """
    标准自适应SMC

    参数:
        target: 目标分布
        config: 运行配置（method 为 SMC 或 RSMC）
        rng: 本次运行的随机流

    返回:
        RunResult（保留全部代，供RSMC回收使用）
    """
    if config.method not in (Method.SMC, Method.RSMC):
        raise ValueError(f"run_smc cannot run method {config.method.value}")

    counted = CountingTarget.fresh(target)
    n = config.n_particles
    resample = get_resampler(config.resampler)
    uniform = np.full(n, 1.0 / n)

    gen = initial_generation(counted, rng, n)
    store = PersistentStore(gen)
    state = RwmState.initial(gen.dim)
    log_z = 0.0
    log_z_trace = [0.0]
    acceptance: List[float] = []
    complete = True

    while gen.beta < 1.0:
        if iteration_cap_reached(store, config):
            complete = False
            break
        t = len(store) + 1

        with counted.phase(REWEIGHT_PHASE):
            beta, weights, log_mean = _reweight(gen, config)
            log_z += log_mean

        indices = resample(weights, n, rng.child(StreamPurpose.RESAMPLE, t))
        resampled = gen.take(indices)

        # 协方差来自重采样后的等权粒子
        state = refresh_covariance(state, resampled.particles, uniform)
        with counted.phase("move"):
            sweep = rwm_sweep(
                resampled, counted, beta, state, config.mcmc_steps,
                rng.child(StreamPurpose.MOVE, t), workers=config.workers,
            )
        state = adapt_scale(state, sweep.mean_acceptance)

        gen = sweep.generation
        store.append(gen, log_z)
        log_z_trace.append(log_z)
        acceptance.append(sweep.mean_acceptance)
        logger.debug(
            f"SMC t={t}: β={beta:.6g}, log Ẑ={log_z:.4f}, "
            f"接受率={sweep.mean_acceptance:.3f}, 尺度={state.global_scale:.4g}"
        )

    return finish_run(config.method, counted, store, log_z_trace, acceptance, complete)
