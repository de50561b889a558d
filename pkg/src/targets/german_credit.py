"""
德国信贷数据 + 马蹄先验稀疏逻辑回归目标

数据: UCI "numeric" 格式，1000行，每行24个整数协变量 + 1个标签(1=好, 2=坏)
参数: (log τ, β_1..β_25, log λ_1..λ_25) 共51维，正参数取对数并加雅可比修正
"""

import logging
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import gammaln

from core.rng import RngStream
from targets.base import Target
from utils.error_handler import DatasetError

logger = logging.getLogger(__name__)

N_ROWS = 1000
N_COVARIATES = 24
N_COLUMNS = N_COVARIATES + 1
N_COEFFICIENTS = N_COVARIATES + 1  # 含截距
N_PARAMS = 1 + 2 * N_COEFFICIENTS

# Gamma(1/2, 1/2)，形状-速率参数化
GAMMA_SHAPE = 0.5
GAMMA_RATE = 0.5
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class CreditDataset:
    """
    design: 1000×25，第0列为截距1，其余24列标准化（样本均值0，样本方差1）
    labels: 长度1000，好=1，坏=0
    """
    design: np.ndarray
    labels: np.ndarray


def load_german_credit(path: str) -> CreditDataset:
    """
    读取德国信贷数值格式文件

    参数:
        path: 文件路径

    返回:
        CreditDataset（标准化协变量 + 截距列）
    """
    if not os.path.exists(path):
        raise DatasetError(
            f"German credit file not found: {path} "
            f"(set GERMAN_CREDIT_PATH or run scripts/fetch_german_credit.py)"
        )

    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]

    rows = []
    for row_index, line in enumerate(lines):
        tokens = line.split()
        if len(tokens) != N_COLUMNS:
            raise DatasetError(
                f"expected shape ({N_ROWS}, {N_COLUMNS}): row {row_index} has {len(tokens)} columns",
                row=row_index,
            )
        try:
            rows.append([float(token) for token in tokens])
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t))
            raise DatasetError(f"parse error at row {row_index}: non-numeric token {bad!r}", row=row_index)

    if len(rows) != N_ROWS:
        raise DatasetError(f"expected shape ({N_ROWS}, {N_COLUMNS}), got ({len(rows)}, {N_COLUMNS})")

    raw = np.asarray(rows, dtype=float)
    covariates = raw[:, :N_COVARIATES]
    raw_labels = raw[:, N_COVARIATES]

    bad_labels = np.flatnonzero(~np.isin(raw_labels, (1.0, 2.0)))
    if bad_labels.size:
        first = int(bad_labels[0])
        raise DatasetError(f"label at row {first} must be 1 or 2, got {raw_labels[first]}", row=first)

    std = covariates.std(axis=0, ddof=1)
    if np.any(std == 0.0):
        constant = int(np.flatnonzero(std == 0.0)[0])
        raise DatasetError(f"covariate column {constant} is constant and cannot be standardized")

    standardized = (covariates - covariates.mean(axis=0)) / std
    design = np.column_stack([np.ones(N_ROWS), standardized])
    labels = (raw_labels == 1.0).astype(float)

    logger.info(f"✅ 已加载德国信贷数据: {path} ({N_ROWS}×{N_COLUMNS})")
    return CreditDataset(design=design, labels=labels)


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _log_gamma_of_log(u: np.ndarray) -> np.ndarray:
    """u = log x，x ~ Gamma(1/2, rate=1/2) 时 u 的对数密度（含雅可比 +u）"""
    with np.errstate(over="ignore"):
        return (
            GAMMA_SHAPE * np.log(GAMMA_RATE) - gammaln(GAMMA_SHAPE)
            + GAMMA_SHAPE * u - GAMMA_RATE * np.exp(u)
        )


def _split(params: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    log_tau = params[:, 0]
    beta = params[:, 1:1 + N_COEFFICIENTS]
    log_lam = params[:, 1 + N_COEFFICIENTS:]
    return log_tau, beta, log_lam


def _log_prior_batch(params: np.ndarray) -> np.ndarray:
    log_tau, beta, log_lam = _split(params)
    return (
        _log_gamma_of_log(log_tau)
        + np.sum(-0.5 * LOG_2PI - 0.5 * beta ** 2, axis=1)
        + np.sum(_log_gamma_of_log(log_lam), axis=1)
    )


def _log_likelihood_batch(params: np.ndarray, data: CreditDataset) -> np.ndarray:
    log_tau, beta, log_lam = _split(params)
    with np.errstate(over="ignore", invalid="ignore"):
        coef = beta * np.exp(log_tau[:, None] + log_lam)
        linear = coef @ data.design.T
        # y·m - log(1 + e^m)：y=1 时为 log σ(m)，y=0 时为 log(1 - σ(m))
        values = np.sum(data.labels * linear - np.logaddexp(0.0, linear), axis=1)
    return np.where(np.isfinite(values), values, -np.inf)


def horseshoe_logreg_log_density(params, data: CreditDataset) -> Tuple[float, float]:
    """
    马蹄先验逻辑回归的 (对数先验, 对数似然)

    参数:
        params: 长度51向量 (log τ, β_1..β_25, log λ_1..λ_25)
        data: 德国信贷数据集
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (N_PARAMS,):
        raise ValueError(f"expected a length-{N_PARAMS} vector, got shape {params.shape}")
    batch = params[None, :]
    return float(_log_prior_batch(batch)[0]), float(_log_likelihood_batch(batch, data)[0])


class HorseshoeLogisticTarget(Target):
    """51维稀疏逻辑回归，RWM在无约束的对数空间中运行"""

    name = "german_credit"
    description = "51-d horseshoe sparse logistic regression on German credit data"

    def __init__(self, data: CreditDataset):
        super().__init__(N_PARAMS)
        self.data = data

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return _log_prior_batch(thetas)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return _log_likelihood_batch(thetas, self.data)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        tiny = np.finfo(float).tiny
        tau = rng.generator.gamma(GAMMA_SHAPE, 1.0 / GAMMA_RATE, size=count)
        lam = rng.generator.gamma(GAMMA_SHAPE, 1.0 / GAMMA_RATE, size=(count, N_COEFFICIENTS))
        beta = rng.normal((count, N_COEFFICIENTS))
        return np.column_stack([
            np.log(np.maximum(tau, tiny)),
            beta,
            np.log(np.maximum(lam, tiny)),
        ])
