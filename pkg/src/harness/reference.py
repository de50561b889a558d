"""
参考值：高精度SMC运行（桌面规模）或解析真值
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import orjson

from core.rng import RngStream
from harness.spec import ReferenceSection
from samplers.config import Method, RunConfig
from samplers.smc import run_smc
from targets.base import Target
from utils.error_handler import ConfigError

logger = logging.getLogger(__name__)

SELF_CHECK_TOLERANCE = 0.1


@dataclass(frozen=True)
class ReferenceResult:
    """
    log_z_ref: 参考 log Z
    mean_ref / sd_ref: θ 的后验均值与标准差
    second_ref / second_sd_ref: θ² 的后验均值与标准差
    source: "analytic" 或 "reference_runs"
    run_log_z: 参考运行的平均 log Ẑ（自检用，未运行时为 None）
    """
    target: str
    log_z_ref: float
    mean_ref: np.ndarray
    sd_ref: np.ndarray
    second_ref: np.ndarray
    second_sd_ref: np.ndarray
    source: str
    run_log_z: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "log_z_ref": self.log_z_ref,
            "mean_ref": self.mean_ref.tolist(),
            "sd_ref": self.sd_ref.tolist(),
            "second_ref": self.second_ref.tolist(),
            "second_sd_ref": self.second_sd_ref.tolist(),
            "source": self.source,
            "run_log_z": self.run_log_z,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReferenceResult":
        return cls(
            target=data["target"],
            log_z_ref=float(data["log_z_ref"]),
            mean_ref=np.asarray(data["mean_ref"], dtype=float),
            sd_ref=np.asarray(data["sd_ref"], dtype=float),
            second_ref=np.asarray(data["second_ref"], dtype=float),
            second_sd_ref=np.asarray(data["second_sd_ref"], dtype=float),
            source=data["source"],
            run_log_z=data.get("run_log_z"),
        )


def save_reference(reference: ReferenceResult, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(orjson.dumps(reference.to_dict(), option=orjson.OPT_INDENT_2))
    logger.info(f"✅ 参考值已写入: {path}")


def load_reference(path: str, target_name: Optional[str] = None) -> ReferenceResult:
    with open(path, "rb") as f:
        reference = ReferenceResult.from_dict(orjson.loads(f.read()))
    if target_name is not None and reference.target != target_name:
        raise ConfigError(f"reference file {path} belongs to target {reference.target!r}, not {target_name!r}")
    return reference


def run_reference(
    target: Target,
    rng: RngStream,
    settings: Optional[ReferenceSection] = None,
    workers: int = 1,
) -> ReferenceResult:
    """
    参考运行：L_ref 次 N_ref 粒子、α_ref 的SMC

    合并所有运行的最后一代粒子得到参考矩；平均 log Ẑ 作为参考证据。
    目标有解析真值时改用解析值，参考运行只作为自检（可关闭）。

    参数:
        target: 目标分布
        rng: 参考随机流，第 r 次运行使用 rng.child(r)
        settings: 参考运行设置
        workers: 并行线程数
    """
    settings = settings or ReferenceSection()
    analytic = target.analytic

    run_log_z = None
    pooled = None
    if analytic is None or settings.self_check:
        config = RunConfig(
            method=Method.SMC,
            n_particles=settings.n_particles,
            ess_alpha=settings.alpha,
            mcmc_steps=settings.mcmc_steps,
        )
        logger.info(
            f"参考运行 {target.name}: L={settings.replicates}, N={settings.n_particles}, "
            f"α={settings.alpha}, k={settings.mcmc_steps}"
        )
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = list(pool.map(lambda r: run_smc(target, config, rng.child(r)), range(settings.replicates)))
        run_log_z = float(np.mean([r.log_z for r in results]))
        pooled = np.vstack([r.final_store.last.particles for r in results])

    if analytic is not None:
        if run_log_z is not None and abs(run_log_z - analytic.log_z) > SELF_CHECK_TOLERANCE:
            logger.warning(
                f"⚠️ {target.name} 参考运行自检偏差较大: {run_log_z:.4f} vs 解析 {analytic.log_z:.4f}"
            )
        return ReferenceResult(
            target=target.name,
            log_z_ref=analytic.log_z,
            mean_ref=analytic.mean,
            sd_ref=analytic.sd,
            second_ref=analytic.second_moment,
            second_sd_ref=analytic.second_sd,
            source="analytic",
            run_log_z=run_log_z,
        )

    squares = pooled ** 2
    return ReferenceResult(
        target=target.name,
        log_z_ref=run_log_z,
        mean_ref=pooled.mean(axis=0),
        sd_ref=pooled.std(axis=0),
        second_ref=squares.mean(axis=0),
        second_sd_ref=squares.std(axis=0),
        source="reference_runs",
        run_log_z=run_log_z,
    )
