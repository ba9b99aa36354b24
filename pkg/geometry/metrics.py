"""
凯勒度量族 - 平坦/傅里叶扰动环面、U(n) 不变径向度量（含 Fubini-Study）、乘积、缩放、一般势函数

所有度量提供 jet(points) -> (G, dG, ddG)：
    G[n, i, j]          = g_{i jbar}
    dG[n, k, i, j]      = d_k g_{i jbar}
    ddG[n, k, l, i, j]  = d_k dbar_l g_{i jbar}
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple
from dataclasses import dataclass

import numpy as np

from config import METRIC_PARAMS, TOLERANCES
from errors import DegenerateMetricError, InvalidInputError
from geometry.stencils import STENCILS
from manifolds.spec import ManifoldSpec

logger = logging.getLogger(__name__)

Jet = Tuple[np.ndarray, np.ndarray, np.ndarray]


class MetricField:
    """度量族基类"""

    n: int = 0
    label: str = "metric"

    def jet(self, points: np.ndarray) -> Jet:
        raise NotImplementedError

    def metric(self, points: np.ndarray) -> np.ndarray:
        return self.jet(points)[0]

    def kahler_class(self) -> Optional[np.ndarray]:
        """度量所在凯勒类的系数（未知时为 None）"""
        return None

    def scaled(self, c: float) -> "MetricField":
        return ScaledMetric(self, c)


def check_positive(
    G: np.ndarray,
    points: np.ndarray,
    floor: Optional[float] = None,
    hermitian_tol: Optional[float] = None,
) -> np.ndarray:
    """
    检查度量埃尔米特对称且正定，返回每点最小特征值

    对称性按 max|G - G^H| / max(1, max|G|) 衡量。

    Raises:
        DegenerateMetricError: 某点不对称超过容差，或最小特征值不超过下限
    """
    if floor is None:
        floor = METRIC_PARAMS["EIGEN_FLOOR"]
    if hermitian_tol is None:
        hermitian_tol = TOLERANCES["HERMITIAN"]
    GH = np.conj(np.swapaxes(G, -1, -2))
    asym = np.max(np.abs(G - GH), axis=(-2, -1)) / max(1.0, float(np.max(np.abs(G))))
    eig = np.linalg.eigvalsh(0.5 * (G + GH))[..., 0]
    bad = int(np.argmax(asym))
    if not asym[bad] <= hermitian_tol:
        raise DegenerateMetricError(
            points[bad], eig[bad],
            message=f"metric not Hermitian at {points[bad]!r} (relative asymmetry {asym[bad]:.3e})",
        )
    worst = int(np.argmin(eig))
    if not np.isfinite(eig[worst]) or eig[worst] <= floor:
        raise DegenerateMetricError(points[worst], eig[worst])
    return eig


def real_coordinates(points: np.ndarray) -> np.ndarray:
    """(N, n) 复坐标 -> (N, 2n) 实坐标 (x1, y1, x2, y2, ...)"""
    X = np.empty((points.shape[0], 2 * points.shape[1]))
    X[:, 0::2] = points.real
    X[:, 1::2] = points.imag
    return X


# =============================================================================
# 环面
# =============================================================================

@dataclass
class FourierMode:
    """势函数扰动 amplitude * cos(K.X + phase)，K 在对偶格中"""
    wave: np.ndarray
    amplitude: float
    phase: float = 0.0


def lattice_matrix(spec: ManifoldSpec) -> np.ndarray:
    """格生成元按列排成的 2n x 2n 实矩阵（块对角）"""
    n = spec.n
    B = np.zeros((2 * n, 2 * n))
    for k, (p, q) in enumerate(spec.periods):
        B[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[p.real, q.real], [p.imag, q.imag]]
    return B


def dual_wave(spec: ManifoldSpec, integers: Sequence[int]) -> np.ndarray:
    """整数向量 m -> 对偶格波矢 K = 2 pi B^{-T} m"""
    m = np.asarray(integers, dtype=float)
    if m.shape != (2 * spec.n,):
        raise InvalidInputError(f"wave vector needs {2 * spec.n} integers, got {m.shape}")
    return 2.0 * math.pi * np.linalg.inv(lattice_matrix(spec)).T @ m


class TorusMetric(MetricField):
    """
    复环面上的平坦度量加傅里叶势函数扰动

    平坦部分 g0 = diag(a_k / (2 A_k))，a_k 为第 k 个因子上的面积（类系数），
    A_k 为基本域的勒贝格面积。扰动不改变凯勒类。
    """

    def __init__(self, spec: ManifoldSpec, areas: Optional[Sequence[float]] = None,
                 modes: Sequence[FourierMode] = ()):
        if spec.kind != "torus":
            raise InvalidInputError(f"TorusMetric needs a torus, got {spec.kind}")
        self.spec = spec
        self.n = spec.n
        if areas is None:
            areas = [abs((np.conj(p) * q).imag) * 2.0 for p, q in spec.periods]
        self.areas = np.asarray(areas, dtype=float)
        if np.any(self.areas <= 0):
            raise InvalidInputError("torus factor areas must be positive")
        cell = np.array([abs((np.conj(p) * q).imag) for p, q in spec.periods])
        self.g0 = np.diag(self.areas / (2.0 * cell)).astype(complex)
        self.modes = list(modes)
        self.label = "flat_torus" if not self.modes else "fourier_torus"

    def kahler_class(self) -> np.ndarray:
        return self.areas.copy()

    def _kappa(self, mode: FourierMode) -> np.ndarray:
        return mode.wave[0::2] - 1j * mode.wave[1::2]

    def potential(self, points: np.ndarray) -> np.ndarray:
        X = real_coordinates(points)
        out = np.zeros(points.shape[0])
        for mode in self.modes:
            out += mode.amplitude * np.cos(X @ mode.wave + mode.phase)
        return out

    def jet(self, points: np.ndarray) -> Jet:
        N, n = points.shape[0], self.n
        G = np.broadcast_to(self.g0, (N, n, n)).astype(complex)
        dG = np.zeros((N, n, n, n), dtype=complex)
        ddG = np.zeros((N, n, n, n, n), dtype=complex)
        if not self.modes:
            return G, dG, ddG
        X = real_coordinates(points)
        for mode in self.modes:
            kappa = self._kappa(mode)
            kb = np.conj(kappa)
            theta = X @ mode.wave + mode.phase
            a = mode.amplitude
            c, s = np.cos(theta), np.sin(theta)
            two = np.einsum("i,j->ij", kappa, kb)
            three = np.einsum("k,i,j->kij", kappa, kappa, kb)
            four = np.einsum("k,l,i,j->klij", kappa, kb, kappa, kb)
            G = G - 0.25 * a * c[:, None, None] * two
            dG = dG + 0.125 * a * s[:, None, None, None] * three
            ddG = ddG + a / 16.0 * c[:, None, None, None, None] * four
        return G, dG, ddG


# =============================================================================
# 射影空间（U(n) 不变径向度量）
# =============================================================================

class RadialMetric(MetricField):
    """
    CP^n 仿射图上的 U(n) 不变度量，势函数 f(rho) = c log(1+rho) + P(mu)

    rho = |z|^2，mu = rho/(1+rho)，P(mu) = sum_k p_k mu^k 是 CP^n 上的光滑函数，
    因此扰动不改变类 [omega] = 2 pi c h。c = 1、P = 0 即 Fubini-Study。
    """

    def __init__(self, n: int, scale: float = 1.0, perturbation: Sequence[float] = ()):
        if scale <= 0:
            raise InvalidInputError(f"FS scale must be positive, got {scale}")
        self.n = n
        self.scale = float(scale)
        coeffs = [0.0] + [float(p) for p in perturbation]
        self.poly = np.polynomial.Polynomial(coeffs)
        self.label = "fubini_study" if not any(perturbation) else "radial_perturbed"

    def kahler_class(self) -> np.ndarray:
        return np.array([2.0 * math.pi * self.scale])

    def potential(self, points: np.ndarray) -> np.ndarray:
        rho = np.sum(np.abs(points) ** 2, axis=1)
        return self.scale * np.log1p(rho) + self.poly(rho / (1.0 + rho))

    def radial_derivatives(self, rho: np.ndarray) -> Tuple[np.ndarray, ...]:
        """f', f'', f''', f'''' 关于 rho"""
        c = self.scale
        u = 1.0 / (1.0 + rho)
        mu = rho * u
        f1 = c * u
        f2 = -c * u ** 2
        f3 = 2.0 * c * u ** 3
        f4 = -6.0 * c * u ** 4
        if self.poly.degree() > 0:
            P1, P2, P3, P4 = (self.poly.deriv(k)(mu) for k in range(1, 5))
            m1, m2, m3, m4 = u ** 2, -2.0 * u ** 3, 6.0 * u ** 4, -24.0 * u ** 5
            f1 = f1 + P1 * m1
            f2 = f2 + P2 * m1 ** 2 + P1 * m2
            f3 = f3 + P3 * m1 ** 3 + 3.0 * P2 * m1 * m2 + P1 * m3
            f4 = f4 + P4 * m1 ** 4 + 6.0 * P3 * m1 ** 2 * m2 + P2 * (3.0 * m2 ** 2 + 4.0 * m1 * m3) + P1 * m4
        return f1, f2, f3, f4

    def momentum(self, theta: np.ndarray) -> np.ndarray:
        """
        径向动量 v = rho f'(rho)，以 theta 表示（rho = tan^2(theta/2)，mu = sin^2(theta/2)）
        """
        mu = np.sin(0.5 * theta) ** 2
        return self.scale * mu + self.poly.deriv(1)(mu) * mu * (1.0 - mu)

    def jet(self, points: np.ndarray) -> Jet:
        z = np.asarray(points, dtype=complex)
        zb = np.conj(z)
        n = self.n
        rho = np.sum(np.abs(z) ** 2, axis=1)
        f1, f2, f3, f4 = self.radial_derivatives(rho)
        d = np.eye(n)

        G = f1[:, None, None] * d + f2[:, None, None] * np.einsum("ni,nj->nij", zb, z)

        dG = f2[:, None, None, None] * (
            np.einsum("nk,ij->nkij", zb, d) + np.einsum("ni,jk->nkij", zb, d)
        ) + f3[:, None, None, None] * np.einsum("ni,nj,nk->nkij", zb, z, zb)

        dd = np.einsum("kl,ij->klij", d, d) + np.einsum("il,kj->klij", d, d)
        t3 = (
            np.einsum("nk,nl,ij->nklij", zb, z, d)
            + np.einsum("kl,ni,nj->nklij", d, zb, z)
            + np.einsum("nl,ni,kj->nklij", z, zb, d)
            + np.einsum("nk,nj,il->nklij", zb, z, d)
        )
        t4 = np.einsum("ni,nj,nk,nl->nklij", zb, z, zb, z)
        ddG = f2[:, None, None, None, None] * dd + f3[:, None, None, None, None] * t3 \
            + f4[:, None, None, None, None] * t4
        return G, dG, ddG


# =============================================================================
# 乘积与缩放
# =============================================================================

class ProductMetric(MetricField):
    """乘积度量：块对角，跨因子的导数为零"""

    def __init__(self, factors: Sequence[MetricField]):
        self.factors = list(factors)
        self.n = sum(f.n for f in self.factors)
        self.label = " x ".join(f.label for f in self.factors)

    def kahler_class(self) -> Optional[np.ndarray]:
        parts = [f.kahler_class() for f in self.factors]
        if any(p is None for p in parts):
            return None
        return np.concatenate(parts)

    def jet(self, points: np.ndarray) -> Jet:
        N, n = points.shape[0], self.n
        G = np.zeros((N, n, n), dtype=complex)
        dG = np.zeros((N, n, n, n), dtype=complex)
        ddG = np.zeros((N, n, n, n, n), dtype=complex)
        o = 0
        for f in self.factors:
            s = slice(o, o + f.n)
            g, dg, ddg = f.jet(points[:, s])
            G[:, s, s] = g
            dG[:, s, s, s] = dg
            ddG[:, s, s, s, s] = ddg
            o += f.n
        return G, dG, ddG


class ScaledMetric(MetricField):
    """c * g"""

    def __init__(self, base: MetricField, c: float):
        if c <= 0:
            raise InvalidInputError(f"scale must be positive, got {c}")
        self.base = base
        self.c = float(c)
        self.n = base.n
        self.label = f"{c:g}*{base.label}"

    def kahler_class(self) -> Optional[np.ndarray]:
        k = self.base.kahler_class()
        return None if k is None else self.c * k

    def jet(self, points: np.ndarray) -> Jet:
        G, dG, ddG = self.base.jet(points)
        return self.c * G, self.c * dG, self.c * ddG


# =============================================================================
# 一般势函数（有限差分）
# =============================================================================

def _fd_gradient(func: Callable, X: np.ndarray, h: float) -> np.ndarray:
    """实梯度 (N, 2n, ...)，四阶中心差分"""
    w = STENCILS[1]
    r = len(w) // 2
    dim = X.shape[1]
    out = None
    for a in range(dim):
        acc = 0.0
        for k, wk in enumerate(w):
            if wk == 0.0:
                continue
            shifted = X.copy()
            shifted[:, a] += (k - r) * h
            acc = acc + wk * func(shifted)
        acc = acc / h
        if out is None:
            out = np.zeros((X.shape[0], dim) + np.shape(acc)[1:], dtype=np.result_type(acc, float))
        out[:, a] = acc
    return out


def _fd_hessian(func: Callable, X: np.ndarray, h: float) -> np.ndarray:
    """实 Hessian (N, 2n, 2n, ...)，对角用二阶模板，非对角用一阶模板的张量积"""
    w1, w2 = STENCILS[1], STENCILS[2]
    r = len(w1) // 2
    dim = X.shape[1]
    out = None

    def put(a, b, value):
        nonlocal out
        if out is None:
            out = np.zeros((X.shape[0], dim, dim) + np.shape(value)[1:], dtype=np.result_type(value, float))
        out[:, a, b] = value

    for a in range(dim):
        acc = 0.0
        for k, wk in enumerate(w2):
            shifted = X.copy()
            shifted[:, a] += (k - r) * h
            acc = acc + wk * func(shifted)
        put(a, a, acc / h ** 2)
        for b in range(a + 1, dim):
            acc = 0.0
            for k, wk in enumerate(w1):
                if wk == 0.0:
                    continue
                for m, wm in enumerate(w1):
                    if wm == 0.0:
                        continue
                    shifted = X.copy()
                    shifted[:, a] += (k - r) * h
                    shifted[:, b] += (m - r) * h
                    acc = acc + wk * wm * func(shifted)
            put(a, b, acc / h ** 2)
            put(b, a, acc / h ** 2)
    return out


def _wirtinger(H: np.ndarray) -> np.ndarray:
    """实 Hessian -> d_i dbar_j = 1/4[(xx + yy) + i(x_i y_j - y_i x_j)]"""
    xx = H[:, 0::2, 0::2]
    yy = H[:, 1::2, 1::2]
    xy = H[:, 0::2, 1::2]
    yx = H[:, 1::2, 0::2]
    return 0.25 * ((xx + yy) + 1j * (xy - yx))


class PotentialMetric(MetricField):
    """
    由任意光滑势函数 phi(X)（X 为实坐标）给出的度量，导数全部用四阶中心差分
    """

    def __init__(self, potential: Callable[[np.ndarray], np.ndarray], n: int, step: Optional[float] = None):
        if step is None:
            step = METRIC_PARAMS["FD_STEP"]
        self.potential = potential
        self.n = n
        self.step = float(step)
        self.label = "potential_fd"

    def _metric_real(self, X: np.ndarray) -> np.ndarray:
        return _wirtinger(_fd_hessian(self.potential, X, self.step))

    def jet(self, points: np.ndarray) -> Jet:
        X = real_coordinates(np.asarray(points, dtype=complex))
        h = self.step
        G = self._metric_real(X)
        grad = _fd_gradient(self._metric_real, X, h)          # (N, 2n, n, n)
        dG = 0.5 * (grad[:, 0::2] - 1j * grad[:, 1::2])
        hess = _fd_hessian(self._metric_real, X, h)           # (N, 2n, 2n, n, n)
        ddG = 0.25 * (
            (hess[:, 0::2, 0::2] + hess[:, 1::2, 1::2])
            + 1j * (hess[:, 0::2, 1::2] - hess[:, 1::2, 0::2])
        )
        return G, dG, ddG


def metric_from_potential(potential, point) -> np.ndarray:
    """
    由势函数求度量矩阵 d^2 phi / dz^i dzbar^j

    Args:
        potential: 闭式度量族（MetricField）或实坐标上的可调用势函数
        point: 单点复坐标 (n,)

    Returns:
        (n, n) 埃尔米特矩阵

    Raises:
        DegenerateMetricError: 结果不正定
    """
    z = np.atleast_2d(np.asarray(point, dtype=complex))
    if isinstance(potential, MetricField):
        G = potential.metric(z)
    elif callable(potential):
        G = PotentialMetric(potential, z.shape[1]).metric(z)
    else:
        raise InvalidInputError("potential must be a MetricField or a callable")
    check_positive(G, z)
    return G[0]

