"""
求积图册 - 周期盒（环面）、矩坐标仿射图（射影空间）及其张量积
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple
from dataclasses import dataclass

import numpy as np

from config import QUADRATURE
from errors import InvalidInputError
from manifolds.spec import ManifoldSpec

logger = logging.getLogger(__name__)


@dataclass
class QuadratureAtlas:
    """
    求积图册

    points 为图坐标 (N, n) 复数组；weights 为 R^{2n} 中坐标体积（勒贝格测度）的权重。
    体积形式 omega^n = n! 2^n det(g) dV。
    """
    points: np.ndarray
    weights: np.ndarray
    kind: str
    resolution: Tuple[int, ...]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]


def volume_density(G: np.ndarray) -> np.ndarray:
    """
    omega^n 相对坐标勒贝格测度的密度 n! 2^n det g

    Args:
        G: (N, n, n) 埃尔米特矩阵

    Returns:
        (N,) 实数组
    """
    n = G.shape[-1]
    return math.factorial(n) * 2.0 ** n * np.linalg.det(G).real


def integrate(atlas: QuadratureAtlas, values: np.ndarray, G: np.ndarray) -> float:
    """
    计算 int_X f omega^n

    Args:
        atlas: 求积图册
        values: 每个样本点处的 f
        G: 每个样本点处的度量矩阵
    """
    return float(np.sum(atlas.weights * np.asarray(values) * volume_density(G)))


def elliptic_atlas(p: complex, q: complex, grid: int) -> QuadratureAtlas:
    """
    椭圆曲线 C/(pZ + qZ) 的均匀周期网格（梯形法则，对三角多项式谱精度）
    """
    s = np.arange(grid) / grid
    ss, uu = np.meshgrid(s, s, indexing="ij")
    z = (ss * p + uu * q).reshape(-1, 1)
    area = abs((np.conj(p) * q).imag)
    weights = np.full(z.shape[0], area / grid ** 2)
    return QuadratureAtlas(points=z, weights=weights, kind="periodic_box", resolution=(grid, grid))


def torus_atlas(spec: ManifoldSpec, grid: Optional[int] = None) -> QuadratureAtlas:
    """
    复环面的周期盒图册（各椭圆因子网格的张量积）
    """
    if spec.kind != "torus":
        raise InvalidInputError(f"torus atlas requested for {spec.kind}")
    if grid is None:
        grid = QUADRATURE["TORUS_GRID"]
    factors = [elliptic_atlas(p, q, grid) for p, q in spec.periods]
    atlas = product_atlas(factors) if len(factors) > 1 else factors[0]
    atlas.kind = "periodic_box"
    return atlas


def _simplex_rule(n: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    标准单形 {mu_k >= 0, sum mu_k <= 1} 上的 Gauss-Legendre 折棍法则

    mu_k = a_k prod_{j<k}(1 - a_j)，雅可比 prod_j (1 - a_j)^(n-j)。
    权重之和精确等于 1/n!。
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    a1 = 0.5 * (x + 1.0)
    w1 = 0.5 * w
    grids = np.meshgrid(*([a1] * n), indexing="ij")
    wgrids = np.meshgrid(*([w1] * n), indexing="ij")
    a = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)

    mu = np.empty_like(a)
    remaining = np.ones(a.shape[0])
    for k in range(n):
        mu[:, k] = a[:, k] * remaining
        weights = weights * (1.0 - a[:, k]) ** (n - 1 - k)
        remaining = remaining * (1.0 - a[:, k])
    return mu, weights


def projective_atlas(n: int, nodes: Optional[int] = None, angles: Optional[int] = None) -> QuadratureAtlas:
    """
    CP^n 仿射图上的矩坐标图册

    FS 体积 omega_FS^n / n! = d mu d phi；换到勒贝格测度
    dV = d mu d phi / (2^n mu_0^(n+1))，mu_0 = 1 - sum mu_k。
    对 FS 势函数 log(1+|z|^2)，常数 1 的积分精确等于 (2 pi)^n。

    Args:
        n: 复维数
        nodes: 每个单形方向的 Gauss-Legendre 节点数
        angles: 每个相位方向的均匀节点数
    """
    if nodes is None:
        nodes = QUADRATURE["PROJECTIVE_NODES"]
    if angles is None:
        angles = QUADRATURE["PROJECTIVE_ANGLES"]

    mu, mu_w = _simplex_rule(n, nodes)
    mu0 = 1.0 - mu.sum(axis=1)
    radius = np.sqrt(mu / mu0[:, None])

    phi1 = 2.0 * math.pi * np.arange(angles) / angles
    phase_grids = np.meshgrid(*([phi1] * n), indexing="ij")
    phases = np.stack([g.ravel() for g in phase_grids], axis=1)
    phase_w = (2.0 * math.pi / angles) ** n

    points = (radius[:, None, :] * np.exp(1j * phases[None, :, :])).reshape(-1, n)
    base = mu_w / (2.0 ** n * mu0 ** (n + 1))
    weights = np.repeat(base, phases.shape[0]) * phase_w
    return QuadratureAtlas(points=points, weights=weights, kind="moment_chart", resolution=(nodes, angles))


def product_atlas(atlases: Sequence[QuadratureAtlas]) -> QuadratureAtlas:
    """
    图册的张量积：坐标拼接，权重相乘
    """
    points = atlases[0].points
    weights = atlases[0].weights
    resolution = tuple(atlases[0].resolution)
    for other in atlases[1:]:
        na, nb = points.shape[0], other.points.shape[0]
        points = np.concatenate([
            np.repeat(points, nb, axis=0),
            np.tile(other.points, (na, 1)),
        ], axis=1)
        weights = np.repeat(weights, nb) * np.tile(other.weights, na)
        resolution = resolution + tuple(other.resolution)
    return QuadratureAtlas(points=points, weights=weights, kind="product", resolution=resolution)


def build_atlas(spec: ManifoldSpec, resolution: Optional[Dict] = None) -> QuadratureAtlas:
    """
    按流形描述构造图册

    Args:
        spec: 模型流形（所有叶因子须为环面或射影空间）
        resolution: {"torus_grid", "projective_nodes", "projective_angles"}

    Raises:
        InvalidInputError: 含有只有类数据的因子
    """
    resolution = dict(resolution or {})
    grid = resolution.get("torus_grid")
    nodes = resolution.get("projective_nodes")
    angles = resolution.get("projective_angles")

    atlases = []
    for leaf in spec.leaves():
        if leaf.kind == "torus":
            atlases.append(torus_atlas(leaf, grid))
        elif leaf.kind == "projective":
            atlases.append(projective_atlas(leaf.n, nodes, angles))
        else:
            raise InvalidInputError(f"factor {leaf.describe()} has class data only; no quadrature atlas")
    if len(atlases) == 1:
        return atlases[0]
    return product_atlas(atlases)


def line_atlas(nodes: Optional[int] = None, angles: Optional[int] = None) -> QuadratureAtlas:
    """CP^1 上的一维图册（用于有理曲线面积）"""
    if angles is None:
        angles = 4
    return projective_atlas(1, nodes, angles)
