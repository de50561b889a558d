"""
漏斗型分层贝叶斯模型
θ ~ N(0, τ²)，z_j | θ ~ N(0, e^θ)，D_j | z_j ~ N(z_j, σ²)，j = 1..30
数据在 θ=0 下由固定种子 FUNNEL_DATA_SEED 生成一次，随仓库提交在 assets/funnel_data.txt，
读取时与重新生成的值比对
"""

import logging
import os
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from config import DEFAULT_FUNNEL_DATA_PATH
from core.rng import RngStream
from targets.base import AnalyticSummary, Target
from utils.error_handler import DatasetError

logger = logging.getLogger(__name__)

N_GROUPS = 30
N_PARAMS = N_GROUPS + 1
TAU = 2.0
SIGMA = 0.1
TRUE_THETA = 0.0
FUNNEL_DATA_SEED = 20240917
# 文件与重新生成值的比对容差（不同平台 libm 的 log 可能差1ulp）
DATA_RTOL = 1e-12

LOG_2PI = np.log(2.0 * np.pi)

# θ 的积分网格（先验 sd=2，后验远窄于此）
QUADRATURE_RANGE = (-30.0, 20.0)
QUADRATURE_POINTS = 50001


def generate_funnel_data(seed: int = FUNNEL_DATA_SEED) -> np.ndarray:
    """
    按生成模型在 θ=0 下抽取30个观测

    使用 RandomState（MT19937 + 极坐标法），其数值流在 numpy 各版本间固定：
    先抽30个 z，再抽30个观测噪声
    """
    rng = np.random.RandomState(seed)
    z = np.exp(0.5 * TRUE_THETA) * rng.standard_normal(N_GROUPS)
    return z + SIGMA * rng.standard_normal(N_GROUPS)


def write_funnel_data(path: str, data: np.ndarray) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# funnel data: theta={TRUE_THETA}, tau={TAU}, sigma={SIGMA}, seed={FUNNEL_DATA_SEED}\n")
        f.write(
            "# numpy.random.RandomState(seed): z = standard_normal(30), eps = standard_normal(30), "
            "D = exp(theta/2)*z + sigma*eps\n"
        )
        for value in data:
            f.write(f"{float(value)!r}\n")


def read_funnel_data(path: str) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as f:
        for row_index, line in enumerate(f):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DatasetError(f"parse error in funnel data at line {row_index}: {line!r}", row=row_index)
    if len(values) != N_GROUPS:
        raise DatasetError(f"expected {N_GROUPS} funnel observations, got {len(values)}")
    return np.asarray(values)


def load_funnel_data(path: str = DEFAULT_FUNNEL_DATA_PATH) -> np.ndarray:
    """
    读取漏斗数据文件，并与按种子重新生成的值比对

    参数:
        path: 数据文件路径，默认为仓库中的 assets/funnel_data.txt；
              文件不存在时按种子生成并写入

    返回:
        长度30的观测向量（文件中的值）
    """
    expected = generate_funnel_data()
    if not os.path.exists(path):
        logger.warning(f"⚠️ 漏斗数据文件不存在，按种子 {FUNNEL_DATA_SEED} 重新生成: {path}")
        try:
            write_funnel_data(path, expected)
        except OSError as e:
            logger.warning(f"⚠️ 无法写入漏斗数据 {path}: {e}")
        return expected

    data = read_funnel_data(path)
    if not np.allclose(data, expected, rtol=DATA_RTOL, atol=0.0):
        raise DatasetError(f"funnel data file {path} does not match seed {FUNNEL_DATA_SEED}")
    return data


def _log_prior_batch(params: np.ndarray) -> np.ndarray:
    theta = params[:, 0]
    z = params[:, 1:]
    with np.errstate(over="ignore"):
        # z=0 时 z²·e^{-θ} 记为 0，避免 0·∞
        scaled = np.where(z == 0.0, 0.0, z ** 2 * np.exp(-theta)[:, None])
    log_theta = -0.5 * np.log(2.0 * np.pi * TAU ** 2) - 0.5 * theta ** 2 / TAU ** 2
    log_z = np.sum(-0.5 * LOG_2PI - 0.5 * theta[:, None] - 0.5 * scaled, axis=1)
    return log_theta + log_z


def _log_likelihood_batch(params: np.ndarray, data: np.ndarray) -> np.ndarray:
    z = params[:, 1:]
    return np.sum(
        -0.5 * np.log(2.0 * np.pi * SIGMA ** 2) - 0.5 * (data - z) ** 2 / SIGMA ** 2,
        axis=1,
    )


def funnel_bhm_log_density(params, data) -> Tuple[float, float]:
    """
    漏斗模型的 (对数先验, 对数似然)

    参数:
        params: 长度31向量 (θ, z_1..z_30)
        data: 长度30观测向量
    """
    params = np.asarray(params, dtype=float)
    data = np.asarray(data, dtype=float)
    if params.shape != (N_PARAMS,):
        raise ValueError(f"expected a length-{N_PARAMS} vector, got shape {params.shape}")
    if data.shape != (N_GROUPS,):
        raise ValueError(f"expected {N_GROUPS} observations, got shape {data.shape}")
    batch = params[None, :]
    return float(_log_prior_batch(batch)[0]), float(_log_likelihood_batch(batch, data)[0])


def funnel_analytic(data: np.ndarray) -> AnalyticSummary:
    """
    积掉局部参数后对 θ 做一维求积

    D_j | θ ~ N(0, e^θ + σ²)
    z_j | θ, D ~ N(D_j·s, σ²·s)，s = e^θ / (e^θ + σ²)
    """
    grid = np.linspace(*QUADRATURE_RANGE, QUADRATURE_POINTS)
    h = grid[1] - grid[0]
    log_w = np.full(grid.size, np.log(h))
    log_w[[0, -1]] = np.log(0.5 * h)

    marginal_var = np.exp(grid) + SIGMA ** 2
    log_f = (
        -0.5 * np.log(2.0 * np.pi * TAU ** 2) - 0.5 * grid ** 2 / TAU ** 2
        + np.sum(
            -0.5 * np.log(2.0 * np.pi * marginal_var)[:, None]
            - 0.5 * data[None, :] ** 2 / marginal_var[:, None],
            axis=1,
        )
    )
    log_z = float(logsumexp(log_f + log_w))
    post = np.exp(log_f + log_w - log_z)

    shrink = expit(grid - np.log(SIGMA ** 2))
    mean_s = np.sum(post * shrink)
    mean_s2 = np.sum(post * shrink ** 2)
    mean_s3 = np.sum(post * shrink ** 3)
    mean_s4 = np.sum(post * shrink ** 4)

    mean = np.empty(N_PARAMS)
    second = np.empty(N_PARAMS)
    fourth = np.empty(N_PARAMS)
    mean[0] = np.sum(post * grid)
    second[0] = np.sum(post * grid ** 2)
    fourth[0] = np.sum(post * grid ** 4)
    mean[1:] = data * mean_s
    second[1:] = data ** 2 * mean_s2 + SIGMA ** 2 * mean_s
    # 正态四阶矩 m⁴ + 6m²v + 3v²，m = D·s，v = σ²·s
    fourth[1:] = data ** 4 * mean_s4 + 6.0 * data ** 2 * SIGMA ** 2 * mean_s3 + 3.0 * SIGMA ** 4 * mean_s2
    return AnalyticSummary(log_z=log_z, mean=mean, second_moment=second, fourth_moment=fourth)


class FunnelTarget(Target):
    """31维漏斗目标；局部尺度随全局参数指数变化"""

    name = "funnel"
    description = "31-d funnel hierarchical model (tau=2, sigma=0.1, 30 groups)"

    def __init__(self, data: Optional[np.ndarray] = None):
        super().__init__(N_PARAMS)
        self.data = load_funnel_data() if data is None else np.asarray(data, dtype=float)
        if self.data.shape != (N_GROUPS,):
            raise DatasetError(f"expected {N_GROUPS} funnel observations, got shape {self.data.shape}")
        self._analytic = funnel_analytic(self.data)

    @property
    def analytic(self) -> AnalyticSummary:
        return self._analytic

    def _log_prior(self, thetas: np.ndarray) -> np.ndarray:
        return _log_prior_batch(thetas)

    def _log_likelihood(self, thetas: np.ndarray) -> np.ndarray:
        return _log_likelihood_batch(thetas, self.data)

    def sample_prior(self, rng: RngStream, count: int) -> np.ndarray:
        theta = TAU * rng.normal(count)
        z = np.exp(0.5 * theta)[:, None] * rng.normal((count, N_GROUPS))
        return np.column_stack([theta, z])
