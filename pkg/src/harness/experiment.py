"""
成本匹配的对比实验

对每个 (N, k)：
    1. SMC/RSMC 以 α=0.9 运行（SMC 的平均似然评估次数作为成本基线）
    2. PS / WFSMC 的 α 标为 auto 时先标定，使成本与基线相差 ≤ 1%
    3. 每个方法运行 L 次重复，第 r 次使用随机流 (root_seed, r, 方法标签)
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from core.rng import StreamPurpose, make_stream
from estimators.moments import estimate_moments
from harness.calibration import calibrate_alpha, pilot_cost
from harness.reference import ReferenceResult, load_reference, run_reference
from harness.report import ExperimentReport, moment_columns
from harness.spec import ExperimentSpec
from samplers.config import Method, RunConfig
from samplers.runner import run_sampler
from targets.base import Target
from targets.registry import build_target
from utils.error_handler import ErrorHandler

logger = logging.getLogger(__name__)

# 先跑基线方法，PS / WFSMC 的标定需要它的成本
METHOD_ORDER = [Method.SMC, Method.RSMC, Method.PS, Method.WFSMC]


def replicate_stream(spec: ExperimentSpec, replicate: int, method: Method, n: int, k: int):
    return make_stream(spec.seed, replicate, method.tag).child(n, k)


def _run_config(spec: ExperimentSpec, method: Method, n: int, k: int, alpha: float) -> RunConfig:
    return RunConfig(
        method=method,
        n_particles=n,
        ess_alpha=alpha,
        mcmc_steps=k,
        max_iterations=spec.sampler.max_iterations,
        resampler=spec.sampler.resampler,
        final_ess_target=spec.sampler.final_ess_target if method == Method.PS else None,
    )


def _run_replicate(
    target: Target,
    spec: ExperimentSpec,
    method: Method,
    n: int,
    k: int,
    alpha: float,
    replicate: int,
    error_handler: ErrorHandler,
) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "method": method.value,
        "n_particles": n,
        "mcmc_steps": k,
        "replicate": replicate,
        "seed": spec.seed,
        "alpha": alpha,
    }
    nan_moments = {column: np.nan for column in moment_columns(target.dim)}
    try:
        result = run_sampler(target, _run_config(spec, method, n, k, alpha), replicate_stream(spec, replicate, method, n, k))
        moments = estimate_moments(result)
    except Exception as e:
        error_handler.handle_error(
            e, "replicate failed",
            {"method": method.value, "n_particles": n, "mcmc_steps": k, "replicate": replicate},
        )
        row.update({
            "log_z": np.nan, "likelihood_evals": 0, "iterations": 0, "acceptance": np.nan,
            "complete": False, "error": f"{type(e).__name__}: {e}",
        })
        row.update(nan_moments)
        return row

    acceptance = float(np.mean(result.acceptance_trace)) if result.acceptance_trace.size else np.nan
    row.update({
        "log_z": result.log_z,
        "likelihood_evals": result.likelihood_evals,
        "iterations": result.iterations,
        "acceptance": acceptance,
        "complete": result.complete,
        "error": "" if result.complete else "iteration cap reached",
    })
    for d in range(target.dim):
        row[f"first_{d}"] = float(moments.first[d])
        row[f"second_{d}"] = float(moments.second[d])
    return row


def _mean_evals(rows: List[Dict[str, Any]]) -> Optional[float]:
    evals = [r["likelihood_evals"] for r in rows if r["complete"] and not r["error"]]
    return float(np.mean(evals)) if evals else None


def resolve_reference(spec: ExperimentSpec, target: Target, workers: int = 1) -> ReferenceResult:
    """优先复用已有的 reference.json，否则执行参考运行"""
    path = spec.reference.path
    if path and os.path.exists(path):
        logger.info(f"复用参考值: {path}")
        return load_reference(path, target.name)
    rng = make_stream(spec.seed, 0, StreamPurpose.REFERENCE)
    return run_reference(target, rng, spec.reference, workers=workers)


def run_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    target: Optional[Target] = None,
    reference: Optional[ReferenceResult] = None,
    progress: bool = False,
) -> ExperimentReport:
    """
    执行完整实验

    参数:
        spec: 实验配置
        workers: 重复实验的并行线程数（不影响结果）
        target: 已构造的目标（默认按 spec.target 构造）
        reference: 已有参考值（默认复用 reference.path 或执行参考运行）
        progress: 是否显示进度条

    返回:
        ExperimentReport
    """
    target = target or build_target(spec.target.name, **spec.target.options)
    reference = reference or resolve_reference(spec, target, workers)
    error_handler = ErrorHandler()
    methods = [m for m in METHOD_ORDER if m in spec.methods]

    total = len(methods) * len(spec.grid.n_particles) * len(spec.grid.mcmc_steps) * spec.replicates
    bar = tqdm(total=total, desc=f"{target.name}", disable=not progress)
    rows: List[Dict[str, Any]] = []

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for n in spec.grid.n_particles:
            for k in spec.grid.mcmc_steps:
                baseline: Optional[float] = None
                for method in methods:
                    alpha = spec.alpha[method]
                    if spec.needs_calibration(method):
                        if baseline is None:
                            baseline = pilot_cost(
                                target, Method.SMC, n, k, spec.baseline_alpha,
                                make_stream(spec.seed, 0, StreamPurpose.PILOT).child(Method.SMC.tag, n, k),
                                spec.calibration.pilot_runs, spec.sampler,
                            )
                        calibration = calibrate_alpha(
                            target, method, n, k, baseline,
                            make_stream(spec.seed, 0, StreamPurpose.PILOT).child(method.tag, n, k),
                            spec.calibration, spec.sampler,
                        )
                        alpha = calibration.alpha

                    alpha = float(alpha)
                    method_rows = list(pool.map(
                        lambda r: _run_replicate(target, spec, method, n, k, alpha, r, error_handler),
                        range(spec.replicates),
                    ))
                    bar.update(len(method_rows))
                    rows.extend(method_rows)

                    if method == Method.SMC:
                        # 全部失败时为 None，后续方法改用 SMC 试运行成本
                        baseline = _mean_evals(method_rows)
                    logger.info(
                        f"{method.value} N={n} k={k}: α={alpha:.4g}, "
                        f"平均似然评估={_mean_evals(method_rows) or float('nan'):.1f}"
                    )
    bar.close()

    stats = error_handler.get_error_stats()
    if stats["total_errors"]:
        logger.warning(f"⚠️ {stats['total_errors']} 次重复失败: {stats['error_counts']}")

    return ExperimentReport.from_raw(rows, reference, target.name)
