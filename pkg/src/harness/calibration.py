"""
ESS阈值标定：让 PS / WFSMC 的平均似然评估次数与 SMC(α=0.9) 基线相差不超过1%
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.rng import RngStream
from harness.spec import DEFAULT_PS_ALPHA, CalibrationSection, SamplerSection
from samplers.config import Method, RunConfig
from samplers.runner import run_sampler
from targets.base import Target
from utils.error_handler import CalibrationError

logger = logging.getLogger(__name__)

ALPHA_RANGES = {
    Method.WFSMC: (0.05, 0.999),
    Method.PS: (0.2, 10.0),
}


@dataclass(frozen=True)
class CalibrationResult:
    """标定结果；parity_ok 为 False 时 alpha 是探测过的最接近值"""
    alpha: float
    mean_evals: float
    baseline_evals: float
    parity_error: float
    parity_ok: bool
    probes: int


def pilot_cost(
    target: Target,
    method: Method,
    n_particles: int,
    mcmc_steps: int,
    alpha: float,
    rng: RngStream,
    pilot_runs: int = 10,
    sampler: Optional[SamplerSection] = None,
) -> float:
    """
    试运行的平均似然评估次数；第 j 次试运行使用 rng.child(j)，
    所有探测点共用同一组随机流
    """
    sampler = sampler or SamplerSection()
    config = RunConfig(
        method=method,
        n_particles=n_particles,
        ess_alpha=alpha,
        mcmc_steps=mcmc_steps,
        max_iterations=sampler.max_iterations,
        resampler=sampler.resampler,
    )
    evals = [run_sampler(target, config, rng.child(j)).likelihood_evals for j in range(pilot_runs)]
    return float(np.mean(evals))


def calibrate_alpha(
    target: Target,
    method: Method,
    n_particles: int,
    mcmc_steps: int,
    baseline_evals: float,
    rng: RngStream,
    settings: Optional[CalibrationSection] = None,
    sampler: Optional[SamplerSection] = None,
) -> CalibrationResult:
    """
    在α区间上做单调二分，使试运行成本与基线成本的相对误差 ≤ 1%

    参数:
        target: 目标分布
        method: PS 或 WFSMC
        n_particles: N
        mcmc_steps: k
        baseline_evals: SMC(α=0.9) 的平均似然评估次数
        rng: 试运行随机流
        settings: 试运行次数、容差、探测上限

    返回:
        CalibrationResult
    """
    method = Method.parse(method)
    if method not in ALPHA_RANGES:
        raise CalibrationError("baseline method needs no calibration")
    if baseline_evals <= 0:
        raise CalibrationError(f"baseline_evals must be positive, got {baseline_evals}")
    settings = settings or CalibrationSection()

    best: Optional[CalibrationResult] = None
    probes = 0

    def probe(alpha: float) -> CalibrationResult:
        nonlocal best, probes
        probes += 1
        cost = pilot_cost(
            target, method, n_particles, mcmc_steps, alpha, rng, settings.pilot_runs, sampler
        )
        error = (cost - baseline_evals) / baseline_evals
        result = CalibrationResult(
            alpha=alpha,
            mean_evals=cost,
            baseline_evals=float(baseline_evals),
            parity_error=error,
            parity_ok=abs(error) <= settings.tolerance,
            probes=probes,
        )
        if best is None or abs(error) < abs(best.parity_error):
            best = result
        logger.debug(f"标定 {method.value} N={n_particles} k={mcmc_steps}: α={alpha:.4f}, 成本误差={error:+.4f}")
        return result

    lo, hi = ALPHA_RANGES[method]
    if method == Method.PS:
        first = probe(DEFAULT_PS_ALPHA)
        if first.parity_ok:
            logger.info(f"✅ PS α={DEFAULT_PS_ALPHA} 已满足成本匹配 (误差 {first.parity_error:+.4f})")
            return first
        if first.mean_evals < baseline_evals:
            lo = DEFAULT_PS_ALPHA
        else:
            hi = DEFAULT_PS_ALPHA

    while probes < settings.max_probes:
        mid = 0.5 * (lo + hi)
        result = probe(mid)
        if result.parity_ok:
            logger.info(f"✅ {method.value} 标定完成: α={mid:.4f}, 成本误差={result.parity_error:+.4f}")
            return result
        # 成本随 α 单调不减
        if result.mean_evals < baseline_evals:
            lo = mid
        else:
            hi = mid

    logger.warning(
        f"⚠️ {method.value} 在 {probes} 次探测内未达到成本匹配，"
        f"使用最接近的 α={best.alpha:.4f} (误差 {best.parity_error:+.4f})"
    )
    return CalibrationResult(
        alpha=best.alpha,
        mean_evals=best.mean_evals,
        baseline_evals=best.baseline_evals,
        parity_error=best.parity_error,
        parity_ok=False,
        probes=probes,
    )
