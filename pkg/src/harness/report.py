"""
实验报告：逐次运行的原始行 + 按 (方法, N, k) 聚合的指标

文件:
    raw.csv          每次重复一行（含展平的矩估计）
    summary.csv      聚合指标
    summary.json     同样的聚合指标（嵌套结构，含参考值）
    plotdata/*.csv   每个指标一个文件：k 一列，每个 方法×N 一列
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import orjson
import pandas as pd

from estimators.metrics import max_squared_bias, mse_log_z
from harness.reference import ReferenceResult
from samplers.config import Method

logger = logging.getLogger(__name__)

RAW_BASE_COLUMNS = [
    "method", "n_particles", "mcmc_steps", "replicate", "seed", "alpha",
    "log_z", "likelihood_evals", "iterations", "acceptance", "complete", "error",
]
SUMMARY_COLUMNS = [
    "target", "method", "n_particles", "mcmc_steps", "n_success", "n_failed", "alpha",
    "mean_log_z", "var_log_z", "mse_log_z", "b1_sq", "b2_sq",
    "mean_evals", "mean_iterations", "mean_acceptance", "parity_error", "parity_ok",
]
PLOT_METRICS = ["mse_log_z", "b1_sq", "b2_sq", "mean_evals"]
GROUP_KEYS = ["method", "n_particles", "mcmc_steps"]
PARITY_TOLERANCE = 0.01


def moment_columns(dim: int) -> List[str]:
    return [f"first_{d}" for d in range(dim)] + [f"second_{d}" for d in range(dim)]


def raw_columns(dim: int) -> List[str]:
    return RAW_BASE_COLUMNS + moment_columns(dim)


def _successes(group: pd.DataFrame) -> pd.DataFrame:
    errors = group["error"].fillna("").astype(str)
    return group[(errors == "") & group["complete"].astype(bool)]


def _aggregate(group: pd.DataFrame, reference: ReferenceResult, dim: int) -> Dict[str, Any]:
    ok = _successes(group)
    n_success = len(ok)
    row: Dict[str, Any] = {
        "n_success": n_success,
        "n_failed": len(group) - n_success,
        "alpha": float(group["alpha"].iloc[0]),
    }
    if n_success == 0:
        row.update({key: np.nan for key in (
            "mean_log_z", "var_log_z", "mse_log_z", "b1_sq", "b2_sq",
            "mean_evals", "mean_iterations", "mean_acceptance",
        )})
        return row

    log_z = ok["log_z"].to_numpy(dtype=float)
    first = ok[[f"first_{d}" for d in range(dim)]].to_numpy(dtype=float)
    second = ok[[f"second_{d}" for d in range(dim)]].to_numpy(dtype=float)
    row.update({
        "mean_log_z": float(np.mean(log_z)),
        "var_log_z": float(np.var(log_z, ddof=1)) if n_success > 1 else 0.0,
        "mse_log_z": mse_log_z(log_z, reference.log_z_ref),
        "b1_sq": max_squared_bias(first, reference.mean_ref, reference.sd_ref),
        "b2_sq": max_squared_bias(second, reference.second_ref, reference.second_sd_ref),
        "mean_evals": float(np.mean(ok["likelihood_evals"].to_numpy(dtype=float))),
        "mean_iterations": float(np.mean(ok["iterations"].to_numpy(dtype=float))),
        "mean_acceptance": float(np.mean(ok["acceptance"].to_numpy(dtype=float))),
    })
    return row


def _add_parity(summary: pd.DataFrame) -> pd.DataFrame:
    """与同一 (N, k) 的 SMC 行比较平均似然评估次数"""
    baseline = {
        (row.n_particles, row.mcmc_steps): row.mean_evals
        for row in summary.itertuples()
        if row.method == Method.SMC.value
    }
    errors, flags = [], []
    for row in summary.itertuples():
        base = baseline.get((row.n_particles, row.mcmc_steps))
        if base is None or not np.isfinite(base) or base == 0 or not np.isfinite(row.mean_evals):
            error = np.nan
        else:
            error = float((row.mean_evals - base) / base)
        errors.append(error)
        if row.method in (Method.SMC.value, Method.RSMC.value):
            flags.append(True)
        else:
            flags.append(bool(np.isfinite(error) and abs(error) <= PARITY_TOLERANCE))
    summary["parity_error"] = errors
    summary["parity_ok"] = flags
    return summary


@dataclass
class ExperimentReport:
    target: str
    reference: ReferenceResult
    raw: pd.DataFrame
    summary: pd.DataFrame

    @property
    def dim(self) -> int:
        return int(self.reference.mean_ref.size)

    @classmethod
    def from_raw(
        cls,
        rows: Union[pd.DataFrame, Sequence[Dict[str, Any]]],
        reference: ReferenceResult,
        target: str = None,
    ) -> "ExperimentReport":
        """
        从原始行重新计算全部聚合指标

        参数:
            rows: 原始行（DataFrame 或字典列表）
            reference: 参考值
            target: 目标名称，默认取参考值中的名称
        """
        dim = int(reference.mean_ref.size)
        target = target or reference.target
        raw = rows.copy() if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        if raw.empty:
            raw = pd.DataFrame(columns=raw_columns(dim))
        else:
            raw = raw[raw_columns(dim)].reset_index(drop=True)

        records = []
        for keys, group in raw.groupby(GROUP_KEYS, sort=False):
            method, n, k = keys
            record = {"target": target, "method": method, "n_particles": int(n), "mcmc_steps": int(k)}
            record.update(_aggregate(group, reference, dim))
            records.append(record)

        summary = pd.DataFrame(records, columns=[c for c in SUMMARY_COLUMNS if c not in ("parity_error", "parity_ok")])
        summary = _add_parity(summary)[SUMMARY_COLUMNS]
        return cls(target=target, reference=reference, raw=raw, summary=summary)

    def summary_records(self) -> List[Dict[str, Any]]:
        return self.summary.to_dict(orient="records")


def _plot_table(summary: pd.DataFrame, metric: str) -> pd.DataFrame:
    if summary.empty:
        return pd.DataFrame(columns=["k"])
    table = summary.assign(
        label=summary["method"].astype(str) + "_N" + summary["n_particles"].astype(str)
    ).pivot(index="mcmc_steps", columns="label", values=metric)
    table = table.sort_index()
    table.index.name = "k"
    table.columns.name = None
    return table.reset_index()


def emit_report(report: ExperimentReport, out_dir: str) -> List[str]:
    """
    写出报告文件

    参数:
        report: 实验报告
        out_dir: 输出目录（不存在时创建）

    返回:
        写出的文件路径列表
    """
    plot_dir = os.path.join(out_dir, "plotdata")
    os.makedirs(plot_dir, exist_ok=True)
    written = []

    raw_path = os.path.join(out_dir, "raw.csv")
    report.raw.to_csv(raw_path, index=False)
    written.append(raw_path)

    summary_path = os.path.join(out_dir, "summary.csv")
    report.summary.to_csv(summary_path, index=False)
    written.append(summary_path)

    json_path = os.path.join(out_dir, "summary.json")
    payload = {
        "target": report.target,
        "reference": report.reference.to_dict(),
        "rows": report.summary_records(),
    }
    with open(json_path, "wb") as f:
        f.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
    written.append(json_path)

    for metric in PLOT_METRICS:
        path = os.path.join(plot_dir, f"{metric}__{report.target}.csv")
        _plot_table(report.summary, metric).to_csv(path, index=False)
        written.append(path)

    logger.info(f"✅ 报告已写入 {out_dir} ({len(report.raw)} 行原始数据, {len(report.summary)} 行聚合)")
    return written
