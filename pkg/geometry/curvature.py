"""
曲率张量 - R_{i jbar k lbar}、Ricci、数量曲率、全纯截面曲率与凯勒对称性检查
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple
from dataclasses import dataclass

import numpy as np

from config import METRIC_PARAMS, TOLERANCES
from errors import InvalidInputError
from geometry.metrics import MetricField, PotentialMetric, check_positive
from components.reports import CheckReport, create_report

logger = logging.getLogger(__name__)


@dataclass
class CurvatureField:
    """
    一组样本点上的曲率

    约定：
        G[n, i, j]          = g_{i jbar}
        Ginv[n, j, i]       = g^{jbar i}
        R[n, i, j, k, l]    = R_{i jbar k lbar}
        ric[n, k, l]        = Ric_{k lbar} = -d_k dbar_l log det g
        S[n]                = g^{lbar k} Ric_{k lbar}
    """
    points: np.ndarray
    G: np.ndarray
    Ginv: np.ndarray
    R: np.ndarray
    ric: np.ndarray
    S: np.ndarray

    @property
    def n(self) -> int:
        return self.G.shape[-1]

    @property
    def size(self) -> int:
        return self.G.shape[0]

    def ric_contraction(self) -> np.ndarray:
        """g^{jbar i} R_{i jbar k lbar}"""
        return np.einsum("nji,nijkl->nkl", self.Ginv, self.R)

    def take(self, index) -> "CurvatureField":
        """取部分样本点"""
        return CurvatureField(
            points=self.points[index], G=self.G[index], Ginv=self.Ginv[index],
            R=self.R[index], ric=self.ric[index], S=self.S[index],
        )


def curvature_from_jet(points: np.ndarray, G: np.ndarray, dG: np.ndarray, ddG: np.ndarray) -> CurvatureField:
    """
    由度量的 2-jet 组装曲率

    R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{qbar p} d_k g_{i qbar} dbar_l g_{p jbar}
    """
    check_positive(G, points)
    Ginv = np.linalg.inv(G)
    dGbar = np.conj(dG)
    R = -np.transpose(ddG, (0, 3, 4, 1, 2)) + np.einsum("nqp,nkiq,nljp->nijkl", Ginv, dG, dGbar)

    # Ric = -tr(g^-1 dd g) + tr(g^-1 d_k g g^-1 dbar_l g)
    first = np.einsum("nba,nklab->nkl", Ginv, ddG)
    second = np.einsum("nab,nkbc,ncd,nlad->nkl", Ginv, dG, Ginv, dGbar)
    ric = -first + second
    S = np.einsum("nlk,nkl->n", Ginv, ric).real
    return CurvatureField(points=points, G=G, Ginv=Ginv, R=R, ric=ric, S=S)


def curvature_field(metric: MetricField, points: np.ndarray) -> CurvatureField:
    """在多个样本点上计算曲率"""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    if points.shape[1] != metric.n:
        raise InvalidInputError(f"points have dimension {points.shape[1]}, metric has {metric.n}")
    return curvature_from_jet(points, *metric.jet(points))


def curvature_tensor(metric: MetricField, point) -> CurvatureField:
    """
    单点曲率

    Args:
        metric: 度量族
        point: (n,) 复坐标

    Returns:
        只含一个样本点的 CurvatureField

    Raises:
        DegenerateMetricError: 度量不正定
    """
    return curvature_field(metric, np.atleast_2d(point))


def quartic(R: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """R(xi, xibar, xi, xibar)，R 形状 (N, n, n, n, n)，xi 形状 (N, n)"""
    xb = np.conj(xi)
    return np.einsum("nijkl,ni,nj,nk,nl->n", R, xi, xb, xi, xb).real


def metric_norm_sq(G: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """|xi|_g^2 = g_{i jbar} xi^i conj(xi^j)"""
    return np.einsum("nij,ni,nj->n", G, xi, np.conj(xi)).real


def hsc(curv: CurvatureField, xi, metric: Optional[MetricField] = None) -> np.ndarray:
    """
    全纯截面曲率 H(xi) = R(xi, xibar, xi, xibar) / |xi|^4

    Args:
        curv: 曲率
        xi: (n,) 或 (N, n) 方向
        metric: 给定时用它重新计算范数，否则使用 curv.G

    Raises:
        InvalidInputError: 零方向
    """
    xi = np.asarray(xi, dtype=complex)
    xi = np.broadcast_to(xi, (curv.size, curv.n))
    G = curv.G if metric is None else metric.metric(curv.points)
    norm = metric_norm_sq(G, xi)
    if np.any(norm <= 0.0):
        raise InvalidInputError("holomorphic direction must be nonzero")
    return quartic(curv.R, xi) / norm ** 2


def orthonormal_frame(G: np.ndarray) -> np.ndarray:
    """
    G = L L^H，M = L^{-T}；M 的列 e_a 满足 e_a^T G conj(e_b) = delta_ab
    """
    L = np.linalg.cholesky(G)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def frame_tensor(curv: CurvatureField, frame: Optional[np.ndarray] = None) -> np.ndarray:
    """R 在标架下的分量 R'_{abcd} = R(e_a, ebar_b, e_c, ebar_d)"""
    if frame is None:
        frame = orthonormal_frame(curv.G)
    fb = np.conj(frame)
    return np.einsum("nijkl,nia,njb,nkc,nld->nabcd", curv.R, frame, fb, frame, fb)


def sup_rm_norm(curv: CurvatureField) -> float:
    """
    sup |Rm|，|Rm|^2 = sum |R_{a bbar c dbar}|^2（酉标架）
    """
    Rp = frame_tensor(curv)
    return float(np.sqrt(np.max(np.sum(np.abs(Rp) ** 2, axis=(1, 2, 3, 4)))))


def kahler_symmetry_check(curv: CurvatureField, tol: Optional[float] = None) -> CheckReport:
    """
    凯勒对称性 R_{ijkl} = R_{kjil} = R_{ilkj} = conj(R_{jilk}) 与 Ricci 缩并恒等式
    """
    if tol is None:
        tol = TOLERANCES["SYMMETRY"]
    R = curv.R
    scale = max(1.0, float(np.max(np.abs(R))))
    deviations = {
        "swap_holomorphic": float(np.max(np.abs(R - np.transpose(R, (0, 3, 2, 1, 4))))),
        "swap_antiholomorphic": float(np.max(np.abs(R - np.transpose(R, (0, 1, 4, 3, 2))))),
        "conjugate": float(np.max(np.abs(R - np.conj(np.transpose(R, (0, 2, 1, 4, 3)))))),
        "ricci_contraction": float(np.max(np.abs(curv.ric_contraction() - curv.ric))),
    }
    worst = max(deviations.values()) / scale
    return create_report(
        "kahler_symmetry",
        worst <= tol,
        measured=deviations,
        bounds={"relative_scale": scale},
        tolerance=tol,
        slack=tol - worst,
        provenance=["closed-form 2-jet of the metric"],
        message=f"worst relative deviation {worst:.2e} over {curv.size} points",
    )


def _complex_potential(metric: MetricField):
    def potential(X: np.ndarray) -> np.ndarray:
        return metric.potential(X[:, 0::2] + 1j * X[:, 1::2])
    return potential


def fd_convergence_order(
    metric: MetricField,
    point=None,
    steps: Optional[Sequence[float]] = None,
) -> Dict[str, float]:
    """
    有限差分曲率相对闭式曲率的收敛阶

    Args:
        metric: 带 potential(points) 的闭式度量族
        point: 检查点，默认取配置中的点（按维数重复）
        steps: 两个步长 h1 > h2

    Returns:
        {"errors": [...], "steps": [...], "order": p}
    """
    if not hasattr(metric, "potential"):
        raise InvalidInputError(f"{metric.label} exposes no potential")
    if steps is None:
        steps = METRIC_PARAMS["FD_ORDER_STEPS"]
    if point is None:
        base = METRIC_PARAMS["FD_ORDER_POINT"][0]
        point = [base * (0.7 ** k) for k in range(metric.n)]
    exact = curvature_tensor(metric, point).R
    potential = _complex_potential(metric)
    errors = []
    for h in steps:
        approx = curvature_tensor(PotentialMetric(potential, metric.n, step=h), point).R
        errors.append(float(np.max(np.abs(approx - exact))))
    order = math.log(errors[0] / errors[-1]) / math.log(steps[0] / steps[-1])
    logger.debug("fd curvature errors %s at steps %s, order %.2f", errors, list(steps), order)
    return {"errors": errors, "steps": list(steps), "order": float(order)}
