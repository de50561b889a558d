"""
自适应随机游走Metropolis（RWM）移动步

- 提议协方差：每次迭代由（加权）粒子集合估计一次，扫描期间冻结
- 全局尺度：Robbins-Monro 递减自适应，目标接受率 23.4%
- 每个粒子使用独立的随机子流，结果与并行度无关
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from core.containers import Generation
from core.logspace import tempered, validate_probability_vector
from core.rng import RngStream
from targets.base import Target
from utils.error_handler import DegenerateEnsembleError, NonFiniteInputError

logger = logging.getLogger(__name__)

TARGET_ACCEPTANCE = 0.234
ADAPTATION_EXPONENT = 0.6
MIN_SCALE = 1e-8
MAX_SCALE = 1e3
OPTIMAL_SCALE_FACTOR = 2.38

# 协方差正则化：cov + max(ε·diag(cov), 1e-12)，分解失败时 ε×10 重试
COV_REGULARIZATION = 1e-6
COV_FLOOR = 1e-12
COV_RETRIES = 3


@dataclass(frozen=True)
class RwmState:
    """
    RWM核状态

    proposal_cov_chol: 提议协方差的下三角Cholesky因子
    global_scale: 全局尺度（>0）
    adaptation_step: Robbins-Monro 步数，每次采样迭代加一
    """
    proposal_cov_chol: np.ndarray
    global_scale: float
    adaptation_step: int = 0
    target_acceptance: float = TARGET_ACCEPTANCE

    def __post_init__(self):
        chol = np.atleast_2d(np.asarray(self.proposal_cov_chol, dtype=float))
        if chol.ndim != 2 or chol.shape[0] != chol.shape[1]:
            raise ValueError(f"Cholesky factor must be square, got shape {chol.shape}")
        if not np.all(np.isfinite(chol)):
            raise NonFiniteInputError("Cholesky factor contains non-finite entries")
        if np.any(np.triu(chol, 1) != 0.0) or np.any(np.diag(chol) <= 0.0):
            raise ValueError("proposal_cov_chol must be lower triangular with positive diagonal")
        if not (self.global_scale > 0.0 and np.isfinite(self.global_scale)):
            raise ValueError(f"global_scale must be positive, got {self.global_scale}")
        object.__setattr__(self, "proposal_cov_chol", chol)
        object.__setattr__(self, "global_scale", float(self.global_scale))

    @classmethod
    def initial(cls, dim: int) -> "RwmState":
        """单位协方差、尺度 2.38/√D"""
        return cls(np.eye(dim), OPTIMAL_SCALE_FACTOR / np.sqrt(dim))

    @property
    def dim(self) -> int:
        return self.proposal_cov_chol.shape[0]

    def with_cholesky(self, chol: np.ndarray) -> "RwmState":
        return replace(self, proposal_cov_chol=chol)


class SweepResult(NamedTuple):
    generation: Generation
    mean_acceptance: float
    likelihood_evals: int
    # 记录链时为全部 k·N 个中间状态（按步、粒子顺序），否则为 None
    trajectory: Optional[Generation]


def _weighted_covariance(particles: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mean = weights @ particles
    centered = particles - mean
    return (centered * weights[:, None]).T @ centered


def _factorize(raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    diag = np.diag(raw)
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(COV_RETRIES + 1),
            retry=retry_if_exception_type(np.linalg.LinAlgError),
            reraise=True,
        ):
            with attempt:
                eps = COV_REGULARIZATION * 10.0 ** (attempt.retry_state.attempt_number - 1)
                cov = raw + np.diag(np.maximum(eps * diag, COV_FLOOR))
                chol = np.linalg.cholesky(cov)
                if not np.all(np.isfinite(chol)):
                    raise np.linalg.LinAlgError("non-finite Cholesky factor")
    except np.linalg.LinAlgError as e:
        raise DegenerateEnsembleError("degenerate ensemble") from e
    return cov, chol


def _check_ensemble(particles, weights) -> Tuple[np.ndarray, np.ndarray]:
    particles = np.asarray(particles, dtype=float)
    if particles.ndim == 1:
        particles = particles[:, None]
    if particles.shape[0] < 2:
        raise ValueError(f"covariance needs at least 2 particles, got {particles.shape[0]}")
    if not np.all(np.isfinite(particles)):
        raise NonFiniteInputError("particles contain non-finite values")
    weights = validate_probability_vector(weights)
    if weights.size != particles.shape[0]:
        raise ValueError(f"{weights.size} weights for {particles.shape[0]} particles")

    # 全部相同或单点权重：没有任何方向上的散布
    support = particles[weights > 0.0]
    if np.all(np.ptp(support, axis=0) == 0.0):
        raise DegenerateEnsembleError("degenerate ensemble")
    return particles, weights


def estimate_covariance(particles, weights) -> np.ndarray:
    """
    加权样本协方差（正则化后，保证可以Cholesky分解）

    参数:
        particles: M×D 粒子矩阵
        weights: 归一化权重，长度M

    返回:
        D×D 协方差矩阵
    """
    particles, weights = _check_ensemble(particles, weights)
    cov, _ = _factorize(_weighted_covariance(particles, weights))
    return cov


def proposal_cholesky(particles, weights) -> np.ndarray:
    """估计协方差并返回其Cholesky因子"""
    particles, weights = _check_ensemble(particles, weights)
    _, chol = _factorize(_weighted_covariance(particles, weights))
    return chol


def refresh_covariance(state: RwmState, particles, weights) -> RwmState:
    """每次采样迭代开始前更新提议协方差"""
    return state.with_cholesky(proposal_cholesky(particles, weights))


def adapt_scale(state: RwmState, observed_acceptance: float) -> RwmState:
    """
    Robbins-Monro 尺度自适应

    log(scale) += n^{-0.6}·(observed − 0.234)，n 为自增后的步数，结果截断到 [1e-8, 1e3]
    """
    if not 0.0 <= observed_acceptance <= 1.0:
        raise ValueError(f"acceptance must lie in [0, 1], got {observed_acceptance}")
    step = state.adaptation_step + 1
    gain = step ** -ADAPTATION_EXPONENT
    log_scale = np.log(state.global_scale) + gain * (observed_acceptance - state.target_acceptance)
    scale = float(np.clip(np.exp(log_scale), MIN_SCALE, MAX_SCALE))
    return replace(state, global_scale=scale, adaptation_step=step)


def _draw_noise(rng: RngStream, n_particles: int, k: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """每个粒子从自己的子流预先抽取 k 个提议噪声和 k 个接受判据"""
    eta = np.empty((n_particles, k, dim))
    log_u = np.empty((n_particles, k))
    for i in range(n_particles):
        stream = rng.child(i)
        eta[i] = stream.normal((k, dim))
        log_u[i] = np.log(stream.uniform(k))
    return eta, log_u


def _sweep_block(
    particles: np.ndarray,
    log_like: np.ndarray,
    target: Target,
    beta: float,
    increments: np.ndarray,
    log_u: np.ndarray,
    record_chain: bool,
):
    """对一组粒子执行 k 步Metropolis更新"""
    x = particles.copy()
    ll = log_like.copy()
    lp = np.atleast_1d(target.log_prior(x))
    accepted = 0
    evals = 0
    chain_x: List[np.ndarray] = []
    chain_ll: List[np.ndarray] = []

    for step in range(increments.shape[1]):
        proposals = x + increments[:, step, :]
        lp_prop = np.atleast_1d(target.log_prior(proposals))

        # 先验为 -inf 的提议直接拒绝，不评估似然
        feasible = np.isfinite(lp_prop)
        ll_prop = np.full(x.shape[0], -np.inf)
        if feasible.any():
            ll_prop[feasible] = target.log_likelihood(proposals[feasible])
            evals += int(feasible.sum())

        with np.errstate(invalid="ignore"):
            delta = (lp_prop + tempered(beta, ll_prop)) - (lp + tempered(beta, ll))
        delta = np.where(np.isnan(delta), -np.inf, delta)
        accept = feasible & (log_u[:, step] < delta)

        x[accept] = proposals[accept]
        ll[accept] = ll_prop[accept]
        lp[accept] = lp_prop[accept]
        accepted += int(accept.sum())

        if record_chain:
            chain_x.append(x.copy())
            chain_ll.append(ll.copy())

    return x, ll, accepted, evals, chain_x, chain_ll


def rwm_sweep(
    ensemble: Generation,
    target: Target,
    beta: float,
    state: RwmState,
    k: int,
    rng: RngStream,
    record_chain: bool = False,
    workers: int = 1,
) -> SweepResult:
    """
    每个粒子独立执行 k 步RWM，目标为 log π(θ) + β·log L(θ)

    参数:
        ensemble: 当前粒子（缓存一致）
        target: 目标分布
        beta: 温度
        state: 核状态（扫描期间只读）
        k: MCMC步数
        rng: 本次扫描的随机流，粒子 i 使用 rng.child(i)
        record_chain: 是否记录全部 k·N 个中间状态（waste-free 需要）
        workers: 按粒子分块的线程数，不影响结果

    返回:
        SweepResult(新一代, 平均接受率, 似然评估次数, 中间状态)
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if k < 1:
        raise ValueError(f"k must be ≥ 1, got {k}")
    if state.dim != ensemble.dim:
        raise ValueError(f"kernel dimension {state.dim} does not match particles {ensemble.dim}")

    n = ensemble.n_particles
    eta, log_u = _draw_noise(rng, n, k, ensemble.dim)
    # 增量一次性算好，分块方式不影响舍入
    increments = eta @ (state.global_scale * state.proposal_cov_chol).T

    blocks = np.array_split(np.arange(n), max(1, min(workers, n)))

    def run(indices: np.ndarray):
        return _sweep_block(
            ensemble.particles[indices], ensemble.log_like[indices], target, beta,
            increments[indices], log_u[indices], record_chain,
        )

    if len(blocks) == 1:
        outputs = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            outputs = list(pool.map(run, blocks))

    particles = np.vstack([o[0] for o in outputs])
    log_like = np.concatenate([o[1] for o in outputs])
    accepted = sum(o[2] for o in outputs)
    evals = sum(o[3] for o in outputs)

    trajectory = None
    if record_chain:
        chain_x = [np.vstack([o[4][s] for o in outputs]) for s in range(k)]
        chain_ll = [np.concatenate([o[5][s] for o in outputs]) for s in range(k)]
        trajectory = Generation(np.vstack(chain_x), np.concatenate(chain_ll), beta)

    mean_acceptance = accepted / (n * k)
    logger.debug(
        f"RWM扫描: β={beta:.6g}, k={k}, 接受率={mean_acceptance:.3f}, "
        f"尺度={state.global_scale:.4g}, 似然评估={evals}"
    )
    return SweepResult(Generation(particles, log_like, beta), mean_acceptance, evals, trajectory)
