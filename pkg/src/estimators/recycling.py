"""
RSMC回收权重：把所有迭代的粒子当作温度混合分布的样本，重加权到后验
"""

from core.containers import PersistentStore
from core.logspace import LogWeights
from samplers.weights import mixture_log_denominator


def recycle_weights(store: PersistentStore) -> LogWeights:
    """
    所有 T·N 个粒子的回收对数权重

    logw̃ = log L(θ) − log[(1/T) Σ_{t′=1..T} exp(β_{t′}·log L(θ) − log Ẑ_{t′})]

    参数:
        store: 完整运行的全部代及其 log Ẑ 序列

    返回:
        未归一化的对数权重（按 (t′, i) 展平）
    """
    if len(store) == 0:
        raise ValueError("recycling needs at least one generation")
    log_like = store.flat_log_like()
    denominator = mixture_log_denominator(log_like, store.beta_array(), store.log_z_array())
    return LogWeights(log_like - denominator)
