"""
sup H 估计 - 单位球面上四次型的投影梯度上升（多起点，逐点并行）
"""

import logging
from typing import Optional
from dataclasses import dataclass

import numpy as np

from config import HSC_SEARCH
from geometry.curvature import CurvatureField, curvature_field, frame_tensor, orthonormal_frame
from geometry.metrics import MetricField
from manifolds.quadrature import QuadratureAtlas

logger = logging.getLogger(__name__)


@dataclass
class HSCEstimate:
    """sup H 的估计结果"""
    value: float
    point: np.ndarray
    direction: np.ndarray
    per_point: np.ndarray
    directions: np.ndarray
    samples: int
    starts: int


def _quartic_frame(Rp: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Q(eta) = R'(eta, etabar, eta, etabar)，eta 形状 (N, S, n)"""
    eb = np.conj(eta)
    return np.einsum("pabcd,psa,psb,psc,psd->ps", Rp, eta, eb, eta, eb).real


def _ascent_direction(Rp: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """T_b = sum R'_{abcd} eta_a eta_c etabar_d（Q 关于 etabar_b 的梯度的一半）"""
    return np.einsum("pabcd,psa,psc,psd->psb", Rp, eta, eta, np.conj(eta))


def _normalize(eta: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(eta, axis=-1, keepdims=True)
    return eta / np.maximum(norm, np.finfo(float).tiny)


def _starts(n: int, size: int, restarts: int, seed: int, warm: Optional[np.ndarray]) -> np.ndarray:
    """起点：标准基向量 + 按 (seed, r) 播种的随机方向 + 可选热启动"""
    blocks = [np.broadcast_to(np.eye(n, dtype=complex), (size, n, n))]
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        z = rng.standard_normal((size, 1, n)) + 1j * rng.standard_normal((size, 1, n))
        blocks.append(z)
    if warm is not None:
        blocks.append(warm[:, None, :])
    return _normalize(np.concatenate(blocks, axis=1))


def maximize_quartic(
    Rp: np.ndarray,
    restarts: Optional[int] = None,
    seed: int = 0,
    warm: Optional[np.ndarray] = None,
    iterations: Optional[int] = None,
):
    """
    在标架坐标的单位球面 |eta| = 1 上最大化 Q(eta)

    Args:
        Rp: (N, n, n, n, n) 单位正交标架下的曲率
        restarts: 随机起点数
        seed: 随机种子
        warm: (N, n) 标架坐标下的热启动方向

    Returns:
        (每点最大值 (N,), 每点最优方向 (N, n), 起点数)
    """
    if restarts is None:
        restarts = HSC_SEARCH["RESTARTS"]
    if iterations is None:
        iterations = HSC_SEARCH["ITERATIONS"]
    size, n = Rp.shape[0], Rp.shape[1]
    if n == 1:
        return Rp[:, 0, 0, 0, 0].real.copy(), np.ones((size, 1), dtype=complex), 1

    eta = _starts(n, size, restarts, seed, warm)
    value = _quartic_frame(Rp, eta)
    scale = np.maximum(np.max(np.abs(Rp.reshape(size, -1)), axis=1), 1e-300)
    tau = np.full(value.shape, HSC_SEARCH["STEP"]) / scale[:, None]
    max_halvings = HSC_SEARCH["MAX_HALVINGS"]
    tol = HSC_SEARCH["TOLERANCE"]

    for it in range(iterations):
        step = _ascent_direction(Rp, eta)
        improved = np.zeros(value.shape, dtype=bool)
        gain = np.zeros(value.shape)
        pending = np.ones(value.shape, dtype=bool)
        for _ in range(max_halvings):
            trial = _normalize(eta + tau[..., None] * step)
            trial_value = _quartic_frame(Rp, trial)
            # 零向量试探步（tau lambda = -1）不接受
            accept = pending & (trial_value >= value) & (np.linalg.norm(trial, axis=-1) > 0.5)
            eta = np.where(accept[..., None], trial, eta)
            gain = np.where(accept, trial_value - value, gain)
            value = np.where(accept, trial_value, value)
            improved |= accept
            pending &= ~accept
            if not pending.any():
                break
            tau = np.where(pending, 0.5 * tau, tau)
        tau = np.where(improved, 2.0 * tau, tau)
        if np.all(gain <= tol * np.maximum(1.0, np.abs(value))):
            logger.debug("quartic ascent stalled after %d iterations", it + 1)
            break

    best = np.argmax(value, axis=1)
    rows = np.arange(size)
    return value[rows, best], eta[rows, best], eta.shape[1]


def sup_hsc(
    metric: MetricField,
    atlas: QuadratureAtlas,
    restarts: Optional[int] = None,
    seed: int = 0,
    warm_start: Optional[np.ndarray] = None,
    curv: Optional[CurvatureField] = None,
) -> HSCEstimate:
    """
    sup_X H 的采样估计

    逐点在 |xi|_g = 1 上最大化 R(xi, xibar, xi, xibar)，再对样本点取最大。
    起点集合随 restarts 单调增大，所以估计值不随重启数减小。

    Args:
        metric: 度量族
        atlas: 样本点
        restarts: 随机重启数
        seed: 随机种子
        warm_start: (N, n) 坐标方向，例如上一快照的最优方向
        curv: 已计算好的曲率（可选）

    Returns:
        HSCEstimate
    """
    if curv is None:
        curv = curvature_field(metric, atlas.points)
    return estimate_from_curvature(curv, restarts=restarts, seed=seed, warm_start=warm_start)


def estimate_from_curvature(
    curv: CurvatureField,
    restarts: Optional[int] = None,
    seed: int = 0,
    warm_start: Optional[np.ndarray] = None,
) -> HSCEstimate:
    """在已计算好的曲率样本上估计 sup H"""
    frame = orthonormal_frame(curv.G)
    Rp = frame_tensor(curv, frame)
    warm = None
    if warm_start is not None:
        # xi = M eta  =>  eta = M^{-1} xi
        warm = np.einsum("nab,nb->na", np.linalg.inv(frame), np.asarray(warm_start, dtype=complex))
    per_point, eta, starts = maximize_quartic(Rp, restarts=restarts, seed=seed, warm=warm)
    directions = np.einsum("nab,nb->na", frame, eta)
    k = int(np.argmax(per_point))
    logger.debug("sup H = %.10g over %d points x %d starts", per_point[k], curv.size, starts)
    return HSCEstimate(
        value=float(per_point[k]),
        point=curv.points[k],
        direction=directions[k],
        per_point=per_point,
        directions=directions,
        samples=curv.size,
        starts=starts,
    )
