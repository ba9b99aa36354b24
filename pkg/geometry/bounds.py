"""
逐点不等式检查 - Schwarz/Royden 型界、Berger 恒等式、乘积度量与有理曲线的 sup H 界
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from config import BERGER_PARAMS, QUADRATURE, TOLERANCES
from errors import InvalidInputError
from geometry.curvature import CurvatureField, frame_tensor
from geometry.hsc_search import estimate_from_curvature, sup_hsc
from geometry.metrics import MetricField, ProductMetric
from manifolds.quadrature import (
    QuadratureAtlas, _simplex_rule, integrate, line_atlas, product_atlas,
)
from manifolds.spec import ManifoldSpec, factor_offsets
from components.reports import CheckReport, create_report, error_report

logger = logging.getLogger(__name__)


def royden_bound_check(
    curv: CurvatureField,
    metric_hat: MetricField,
    A: float,
    measured_sup: Optional[float] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    Schwarz 型界 ghat^{jbar i} ghat^{qbar p} R_{i jbar p qbar} <= A (tr_ghat omega)^2

    A <= 0 时使用更强的形式 A (n+1)/(2n) (tr_ghat omega)^2。

    Args:
        curv: omega 在样本点上的曲率
        metric_hat: 任意凯勒度量 ghat
        A: 调用方声明的 sup H 上界
        measured_sup: 已测得的 sup H（缺省时在样本点上估计）
        tol: 容差

    Returns:
        CheckReport；A 低于测得的 sup H 时为 ERROR 级别
    """
    if tol is None:
        tol = TOLERANCES["ROYDEN"]
    n = curv.n
    nonpositive = A <= 0
    name = "royden_nonpositive" if nonpositive else "royden"
    if measured_sup is None:
        measured_sup = estimate_from_curvature(curv).value
    if A < measured_sup - TOLERANCES["HSC_BOUND"]:
        return error_report(
            name,
            f"A = {A:.6g} is below the measured sup H = {measured_sup:.6g}",
            measured={"sup_H": measured_sup},
            bounds={"A": A},
            slack=A - measured_sup,
        )

    Ghat = metric_hat.metric(curv.points)
    Hhat = np.linalg.inv(Ghat)
    trace = np.einsum("nji,nij->n", Hhat, curv.G).real
    contraction = np.einsum("nji,nqp,nijpq->n", Hhat, Hhat, curv.R).real
    factor = A * (n + 1) / (2.0 * n) if nonpositive else A
    slack = factor * trace ** 2 - contraction
    worst = int(np.argmin(slack))
    return create_report(
        name,
        bool(slack[worst] >= -tol),
        measured={"sup_H": measured_sup, "worst_point": curv.points[worst], "trace_at_worst": trace[worst]},
        bounds={"A": A, "effective_constant": factor},
        tolerance=tol,
        slack=float(slack[worst]),
        provenance=["pointwise contraction over sample points"],
        message=f"min slack {slack[worst]:.3e} over {curv.size} points",
    )


def simultaneous_frame(G_hat: np.ndarray, G: np.ndarray) -> np.ndarray:
    """
    对 ghat 单位正交、对 g 正交的标架

    解广义特征问题 G v = lambda Ghat v（v^H Ghat v = I），取 xi = conj(v)。

    Args:
        G_hat: (N, n, n) 或 (n, n)
        G: 同形状

    Returns:
        (N, n, n)，第 a 列为第 a 个标架向量
    """
    G_hat = np.asarray(G_hat, dtype=complex)
    if G_hat.ndim == 2:
        G_hat = G_hat[None]
    G = np.asarray(G, dtype=complex).reshape(G_hat.shape)
    frames = np.empty(G_hat.shape, dtype=complex)
    for k in range(G_hat.shape[0]):
        _, v = linalg.eigh(G[k], G_hat[k])
        frames[k] = np.conj(v)
    return frames


def royden_refined_check(
    curv: CurvatureField,
    frame: np.ndarray,
    A: float,
    G_hat: np.ndarray,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    正交标架形式的界

    sum_{a,b} R(xi_a, xibar_a, xi_b, xibar_b) <= A/2 ((sum |xi_a|^2)^2 + sum |xi_a|^4)

    标架须对 ghat 单位正交且对 omega 正交。

    Args:
        curv: omega 的曲率
        frame: (N, n, n) 标架，列为向量
        A: sup H 的上界（可为任意符号）
        G_hat: (N, n, n) ghat
    """
    if tol is None:
        tol = TOLERANCES["ROYDEN"]
    name = "royden_refined"
    n = curv.n
    frame = np.asarray(frame, dtype=complex).reshape(curv.size, n, n)
    G_hat = np.asarray(G_hat, dtype=complex).reshape(curv.size, n, n)

    gram_hat = np.einsum("nij,nia,njb->nab", G_hat, frame, np.conj(frame))
    gram = np.einsum("nij,nia,njb->nab", curv.G, frame, np.conj(frame))
    eye = np.eye(n)
    off = ~np.eye(n, dtype=bool)
    orthonormal_err = float(np.max(np.abs(gram_hat - eye)))
    orthogonal_err = float(np.max(np.abs(gram[:, off]))) if n > 1 else 0.0
    if orthonormal_err > TOLERANCES["ORTHONORMAL"]:
        return error_report(name, f"frame is not orthonormal for ghat (error {orthonormal_err:.2e})")
    if orthogonal_err > TOLERANCES["ORTHONORMAL"] * max(1.0, float(np.max(np.abs(gram)))):
        return error_report(name, f"frame vectors are not orthogonal for omega (error {orthogonal_err:.2e})")

    lengths = np.real(np.einsum("naa->na", gram))
    fb = np.conj(frame)
    curvature_sum = np.einsum("nijkl,nia,nja,nkb,nlb->n", curv.R, frame, fb, frame, fb).real
    bound = 0.5 * A * (lengths.sum(axis=1) ** 2 + (lengths ** 2).sum(axis=1))
    slack = bound - curvature_sum
    worst = int(np.argmin(slack))
    return create_report(
        name,
        bool(slack[worst] >= -tol),
        measured={"curvature_sum": curvature_sum[worst], "frame_lengths": lengths[worst]},
        bounds={"A": A, "bound": bound[worst]},
        tolerance=tol,
        slack=float(slack[worst]),
        provenance=["ghat-orthonormal and omega-orthogonal frames"],
        message=f"min slack {slack[worst]:.3e} over {curv.size} frames",
    )


def direction_quadrature(n: int, resolution: Optional[Tuple[int, int]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    CP^{n-1} 上 FS 测度的方向求积（单位向量，权重和为 1）

    n = 2 时在矩坐标 mu 上用中点法则、相位上用均匀网格；更高维用单形 Gauss-Legendre。
    """
    nodes, angles = resolution if resolution is not None else BERGER_PARAMS["DIRECTIONS"]
    m = n - 1
    if m == 1:
        mu = ((np.arange(nodes) + 0.5) / nodes)[:, None]
        mu_w = np.full(nodes, 1.0 / nodes)
    else:
        mu, mu_w = _simplex_rule(m, nodes)
        mu_w = mu_w / mu_w.sum()
    phi1 = 2.0 * math.pi * np.arange(angles) / angles
    phases = np.stack([g.ravel() for g in np.meshgrid(*([phi1] * m), indexing="ij")], axis=1)

    mu0 = np.clip(1.0 - mu.sum(axis=1), 0.0, None)
    head = np.repeat(np.sqrt(mu0), phases.shape[0])[:, None]
    tail = (np.sqrt(mu)[:, None, :] * np.exp(1j * phases[None, :, :])).reshape(-1, m)
    eta = np.concatenate([head.astype(complex), tail], axis=1)
    weights = np.repeat(mu_w, phases.shape[0]) / phases.shape[0]
    return eta, weights


def berger_identity_check(
    curv: CurvatureField,
    index: int = 0,
    resolution: Optional[Tuple[int, int]] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    Berger 恒等式：H 在方向空间上的 FS 平均等于 2S/(n(n+1))

    Args:
        curv: 曲率
        index: 样本点编号
        resolution: (矩坐标节点, 相位节点)

    Raises:
        InvalidInputError: n = 1
    """
    n = curv.n
    if n < 2:
        raise InvalidInputError("Berger identity needs n >= 2")
    if tol is None:
        tol = TOLERANCES["BERGER"]
    if resolution is None:
        resolution = BERGER_PARAMS["DIRECTIONS"]
    single = curv.take(slice(index, index + 1))
    eta, weights = direction_quadrature(n, resolution)
    Rp = frame_tensor(single)[0]
    eb = np.conj(eta)
    H = np.einsum("abcd,ma,mb,mc,md->m", Rp, eta, eb, eta, eb).real
    average = float(np.sum(weights * H))
    mass = math.pi ** (n - 1) / math.factorial(n - 1)
    rhs = 2.0 * float(single.S[0]) / (n * (n + 1))
    rel = abs(average - rhs) / (1.0 + abs(rhs))
    return create_report(
        "berger",
        rel <= tol,
        measured={"average_H": average, "integral_H": mass * average, "relative_error": rel},
        bounds={"two_S_over_n_n1": rhs, "direction_mass": mass},
        tolerance=tol,
        slack=tol - rel,
        provenance=[f"direction quadrature {resolution[0]}x{resolution[1]}"],
        message=f"point {single.points[0]}",
    )


def product_hsc_check(
    metric_x: MetricField,
    metric_y: MetricField,
    A1: float,
    A2: float,
    atlas_x: QuadratureAtlas,
    atlas_y: QuadratureAtlas,
    restarts: Optional[int] = None,
    seed: int = 0,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    乘积度量的 sup H <= A1 + A2
    """
    if tol is None:
        tol = TOLERANCES["HSC_BOUND"]
    name = "product_hsc"
    sup_x = sup_hsc(metric_x, atlas_x, restarts=restarts, seed=seed).value
    sup_y = sup_hsc(metric_y, atlas_y, restarts=restarts, seed=seed).value
    if A1 <= 0 or A2 <= 0:
        return error_report(name, "A1 and A2 must be positive", bounds={"A1": A1, "A2": A2})
    if A1 < sup_x - tol or A2 < sup_y - tol:
        return error_report(
            name,
            f"factor bounds below measured sup H ({sup_x:.6g}, {sup_y:.6g})",
            measured={"sup_H_x": sup_x, "sup_H_y": sup_y},
            bounds={"A1": A1, "A2": A2},
        )
    product = ProductMetric([metric_x, metric_y])
    estimate = sup_hsc(product, product_atlas([atlas_x, atlas_y]), restarts=restarts, seed=seed)
    slack = A1 + A2 - estimate.value
    return create_report(
        name,
        slack >= -tol,
        measured={"sup_H": estimate.value, "sup_H_x": sup_x, "sup_H_y": sup_y, "samples": estimate.samples},
        bounds={"A1_plus_A2": A1 + A2},
        tolerance=tol,
        slack=slack,
        provenance=["block-diagonal product metric", "sampled direction search"],
        message=f"{product.label}",
    )


def curve_area(metric: MetricField, offset: int, nodes: Optional[int] = None) -> float:
    """
    坐标直线 {z_offset = w，其余坐标为 0} 的面积 int_C omega
    """
    line = line_atlas(nodes)
    points = np.zeros((line.size, metric.n), dtype=complex)
    points[:, offset] = line.points[:, 0]
    G = metric.metric(points)
    g = G[:, offset, offset][:, None, None]
    return integrate(line, np.ones(line.size), g)


def rational_curve_bound_check(
    spec: ManifoldSpec,
    metric: MetricField,
    atlas: QuadratureAtlas,
    restarts: Optional[int] = None,
    seed: int = 0,
) -> CheckReport:
    """
    有理曲线给出的下界 sup H >= pi / (32 int_C omega)

    有理曲线取第一个射影因子中的坐标直线。

    Raises:
        InvalidInputError: 模型中没有射影因子
    """
    if not spec.has_projective_factor():
        raise InvalidInputError(f"{spec.describe()} contains no rational curve")
    offset = next(z for leaf, _, z in factor_offsets(spec) if leaf.kind == "projective")
    area = curve_area(metric, offset, QUADRATURE["PROJECTIVE_NODES"])
    bound = math.pi / (32.0 * area)
    estimate = sup_hsc(metric, atlas, restarts=restarts, seed=seed)
    return create_report(
        "rational_curve",
        estimate.value >= bound,
        measured={"sup_H": estimate.value, "curve_area": area},
        bounds={"pi_over_32_area": bound},
        tolerance=0.0,
        slack=estimate.value - bound,
        provenance=["coordinate line in the projective factor", "1-dimensional quadrature"],
        message=f"area {area:.6g}",
    )
