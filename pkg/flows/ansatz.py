"""
对称约化 - CP^n 上 U(n) 不变的径向动量剖面与环面上只依赖 x 的管状势函数
"""

import logging
import math
from functools import lru_cache
from itertools import product
from typing import Dict, Optional, Tuple

import numpy as np

from config import FLOW_PARAMS
from errors import DegenerateMetricError, InvalidInputError
from chern.forms import curvature_norm_sq, form_norm_sq
from geometry.curvature import curvature_from_jet
from geometry.hsc_search import estimate_from_curvature
from geometry.metrics import RadialMetric, TorusMetric
from geometry.stencils import derivative, mixed_derivative
from manifolds.classes import (
    KahlerClassVector, class_pairing, flow_class, make_class, normalized_flow_class,
)
from manifolds.spec import ManifoldSpec, projective_spec

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def sine_weights(size: int) -> np.ndarray:
    """
    单元中心节点上的求积权重，使 sum w_j sin(k theta_j) = int_0^pi sin(k theta) 对 k = 1..size 精确成立
    """
    theta = (np.arange(size) + 0.5) * math.pi / size
    k = np.arange(1, size + 1)
    A = np.sin(np.outer(k, theta))
    b = (1.0 - (-1.0) ** k) / k
    w = np.linalg.solve(A, b)
    w.flags.writeable = False
    return w


class FlowAnsatz:
    """约化后的流：状态向量 y 与网格节点上的几何量"""

    kind: str = ""
    n: int = 0
    spec: ManifoldSpec = None

    def initial_state(self) -> np.ndarray:
        raise NotImplementedError

    def rhs(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        raise NotImplementedError

    def min_eig(self, t: float, y: np.ndarray, normalized: bool = False) -> float:
        raise NotImplementedError

    def trace_field(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, t: float, y: np.ndarray, f: np.ndarray, normalized: bool = False) -> np.ndarray:
        raise NotImplementedError

    def interior(self) -> np.ndarray:
        raise NotImplementedError

    def initial_class(self) -> KahlerClassVector:
        raise NotImplementedError

    def diagnostics(self, t: float, y: np.ndarray, normalized: bool = False, warm=None) -> Tuple[Dict, Optional[np.ndarray]]:
        raise NotImplementedError

    def expected_class(self, t: float, normalized: bool = False) -> KahlerClassVector:
        """类的演化规律"""
        alpha = self.initial_class()
        if normalized:
            return normalized_flow_class(self.spec, alpha, t)
        return flow_class(self.spec, alpha, t)

    def expected_volume(self, t: float, normalized: bool = False) -> float:
        cls = self.expected_class(t, normalized)
        return float(class_pairing(self.spec, [cls] * self.n))


# =============================================================================
# 径向 ansatz（CP^n）
# =============================================================================

class RadialAnsatz(FlowAnsatz):
    """
    U(n) 不变度量由动量剖面 v(theta) 描述，theta 为到极点的 FS 角，mu = sin^2(theta/2)

    v 关于 theta = 0 与 theta = pi 均为偶函数，差分用 reflect 边界。
    流方程 d_t v = L(v)（归一化流再减 v）：
        L(v) = 1/2 cos + 1/2 sin v'' / v' + (n-1) 1/2 sin v' / v - n
    """

    kind = "projective_radial"

    def __init__(self, n: int, initial: Optional[RadialMetric] = None, grid: Optional[int] = None):
        if grid is None:
            grid = FLOW_PARAMS["RADIAL_GRID"]
        if initial is None:
            initial = RadialMetric(n)
        if initial.n != n:
            raise InvalidInputError(f"initial metric has dimension {initial.n}, ansatz {n}")
        self.n = n
        self.spec = projective_spec(n)
        self.grid = grid
        self.h = math.pi / grid
        self.theta = (np.arange(grid) + 0.5) * self.h
        self.sin = np.sin(self.theta)
        self.cos = np.cos(self.theta)
        self.weights = sine_weights(grid)
        self.initial = initial
        self.v_hat = initial.momentum(self.theta)
        self.v_hat_t = self._d(self.v_hat, 1)
        if np.any(self.v_hat <= 0) or np.any(self.v_hat_t <= 0):
            raise DegenerateMetricError(self.theta[int(np.argmin(self.v_hat_t))], float(np.min(self.v_hat_t)))
        self.tangential = self.theta >= FLOW_PARAMS["POLE_MARGIN"]

    def _d(self, v: np.ndarray, order: int) -> np.ndarray:
        return derivative(v, order, self.h, mode="reflect")

    def initial_state(self) -> np.ndarray:
        return self.v_hat.copy()

    def initial_class(self) -> KahlerClassVector:
        return make_class(self.initial.kahler_class())

    def operator(self, v: np.ndarray) -> np.ndarray:
        """L(v)"""
        v1, v2 = self._d(v, 1), self._d(v, 2)
        out = 0.5 * self.cos + 0.5 * self.sin * v2 / v1 - self.n
        if self.n > 1:
            out = out + (self.n - 1) * 0.5 * self.sin * v1 / v
        return out

    def rhs(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        out = self.operator(y)
        return out - y if normalized else out

    def min_eig(self, t: float, y: np.ndarray, normalized: bool = False) -> float:
        v1 = self._d(y, 1)
        return float(min(np.min(v1 / self.v_hat_t), np.min(y / self.v_hat)))

    def boundary_value(self, v: np.ndarray) -> float:
        """v(pi)，利用关于 pi 的偶性外推"""
        return float((9.0 * v[-1] - v[-2]) / 8.0)

    def class_coefficients(self, y: np.ndarray) -> np.ndarray:
        return np.array([2.0 * math.pi * self.boundary_value(y)])

    def integrate(self, y: np.ndarray, f: np.ndarray) -> float:
        """int f omega^n = (2 pi)^n int f n v^(n-1) v' d theta"""
        v1 = self._d(y, 1)
        density = self.n * y ** (self.n - 1) * v1
        return float((2.0 * math.pi) ** self.n * np.sum(self.weights * f * density))

    def curvature_profile(self, y: np.ndarray) -> Dict[str, np.ndarray]:
        """
        径向/混合/切向曲率分量 alpha, beta, gamma（单位正交标架）
        """
        v1, v2, v3 = self._d(y, 1), self._d(y, 2), self._d(y, 3)
        s, c = self.sin, self.cos
        psi = 0.5 * s * v1
        lam = 0.5 * c + 0.5 * s * v2 / v1
        lam_t = -0.5 * s + 0.5 * c * v2 / v1 + 0.5 * s * (v3 / v1 - v2 ** 2 / v1 ** 2)
        alpha = -lam_t / v1
        beta = psi / y ** 2 - lam / y
        gamma = (y - psi) / y ** 2
        return {"alpha": alpha, "beta": beta, "gamma": gamma, "psi": psi, "v1": v1}

    def hsc_max(self, prof: Dict[str, np.ndarray]) -> np.ndarray:
        """
        H(p) = alpha p^2 + 4 beta p(1-p) + 2 gamma (1-p)^2 在 p in [0, 1] 上的精确最大值，
        p 为方向在径向上的权重；极点附近只取径向方向
        """
        a, b, g = prof["alpha"], prof["beta"], prof["gamma"]
        if self.n == 1:
            return a.copy()
        quad = a - 4.0 * b + 2.0 * g
        lin = 4.0 * b - 4.0 * g
        best = np.maximum(a, 2.0 * g)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = -lin / (2.0 * quad)
        inside = (quad < 0) & (p > 0) & (p < 1)
        vertex = np.where(inside, quad * p ** 2 + lin * p + 2.0 * g, -np.inf)
        best = np.maximum(best, vertex)
        return np.where(self.tangential, best, a)

    def diagnostics(self, t: float, y: np.ndarray, normalized: bool = False, warm=None):
        n = self.n
        prof = self.curvature_profile(y)
        a, b, g = prof["alpha"], prof["beta"], prof["gamma"]
        r1 = a + (n - 1) * b
        ra = b + n * g
        S = a + 2 * (n - 1) * b + n * (n - 1) * g
        ric_omega = (r1 + 1.0) ** 2 + (n - 1) * (ra + 1.0) ** 2
        rm = a ** 2 + 4 * (n - 1) * b ** 2 + 2 * n * (n - 1) * g ** 2
        mask = self.tangential if n > 1 else np.ones(self.grid, dtype=bool)
        out = {
            "sup_H": float(np.max(self.hsc_max(prof))),
            "M_t": float(np.max(self.trace_field(t, y, normalized))),
            "min_eig": self.min_eig(t, y, normalized),
            "vol": self.integrate(y, np.ones(self.grid)),
            "S_int": self.integrate(y, S),
            "ric_plus_omega_sq_int": self.integrate(y, ric_omega),
            "S_sq_int": self.integrate(y, S ** 2),
            "sup_S": float(np.max(np.abs(S[mask]))),
            "sup_rm": float(np.sqrt(np.max(rm[mask]))),
            "class_coeff": float(self.class_coefficients(y)[0]),
        }
        return out, None

    def trace_field(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        """tr_{omega(t)} omega_hat = v_hat'/v' + (n-1) v_hat/v"""
        v1 = self._d(y, 1)
        return self.v_hat_t / v1 + (self.n - 1) * self.v_hat / y

    def laplacian(self, t: float, y: np.ndarray, f: np.ndarray, normalized: bool = False) -> np.ndarray:
        """U(n) 不变函数的拉普拉斯 f_ss/psi + (n-1) f_s/v，d_s = 1/2 sin d_theta"""
        psi = 0.5 * self.sin * self._d(y, 1)
        f_s = 0.5 * self.sin * self._d(f, 1)
        f_ss = 0.5 * self.sin * self._d(f_s, 1)
        out = f_ss / psi
        if self.n > 1:
            out = out + (self.n - 1) * f_s / y
        return out

    def interior(self) -> np.ndarray:
        m = FLOW_PARAMS["POLE_MARGIN"]
        return (self.theta >= m) & (self.theta <= math.pi - m)


# =============================================================================
# 管状 ansatz（环面）
# =============================================================================

class TubeAnsatz(FlowAnsatz):
    """
    势函数只依赖实部 x 的环面度量 G = g0 + 1/4 Hess_x U

    要求 p_k 为实数且 Re q_k 是 p_k 的整数倍，使 U 在 x 方向以 p_k 为周期。
    流方程 d_t U = log(det G / det g0)（归一化流：g0 换为 e^-t g0 并减 U）。
    """

    kind = "torus_tube"

    def __init__(self, spec: ManifoldSpec, initial: Optional[TorusMetric] = None, grid: Optional[int] = None,
                 values: Optional[np.ndarray] = None):
        if spec.kind != "torus":
            raise InvalidInputError(f"tube ansatz needs a torus, got {spec.kind}")
        if grid is None:
            grid = FLOW_PARAMS["TUBE_GRID"]
        for p, q in spec.periods:
            if abs(p.imag) > 1e-12 or abs(math.remainder(q.real, p.real)) > 1e-12:
                raise InvalidInputError(f"lattice ({p}, {q}) does not admit x-only potentials")
        if initial is None:
            initial = TorusMetric(spec)
        self.spec = spec
        self.n = spec.n
        self.grid = grid
        self.initial = initial
        self.period = np.array([p.real for p, _ in spec.periods])
        self.h = tuple(self.period / grid)
        self.g0 = initial.g0.real.copy()
        cell = np.array([abs((np.conj(p) * q).imag) for p, q in spec.periods])
        self.cell_weight = float(np.prod(cell / grid))

        axes = [np.arange(grid) * hk for hk in self.h]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.shape = (grid,) * self.n
        self.points = np.stack([m.ravel() for m in mesh], axis=1).astype(complex)

        if values is None:
            for mode in initial.modes:
                if np.any(np.abs(mode.wave[1::2]) > 1e-12):
                    raise InvalidInputError("Fourier modes with y-dependence are outside the tube ansatz")
            values = initial.potential(self.points)
        self.u0 = np.asarray(values, dtype=float).reshape(self.shape)
        self.G_hat = self._metric(0.0, self.u0.ravel(), False)
        self.L_hat = np.linalg.cholesky(self.G_hat)

    def _partial(self, U: np.ndarray, idx: Tuple[int, ...]) -> np.ndarray:
        orders = [0] * self.n
        for i in idx:
            orders[i] += 1
        return mixed_derivative(U, orders, self.h, mode="wrap").ravel()

    def _base(self, t: float, normalized: bool) -> np.ndarray:
        return self.g0 * (math.exp(-t) if normalized else 1.0)

    def _metric(self, t: float, y: np.ndarray, normalized: bool) -> np.ndarray:
        U = y.reshape(self.shape)
        n = self.n
        G = np.empty((y.size, n, n))
        for i in range(n):
            for j in range(i, n):
                G[:, i, j] = G[:, j, i] = 0.25 * self._partial(U, (i, j))
        return G + self._base(t, normalized)

    def jet(self, t: float, y: np.ndarray, normalized: bool = False):
        """网格节点上的 (G, dG, ddG)"""
        U = y.reshape(self.shape)
        n = self.n
        G = self._metric(t, y, normalized).astype(complex)
        dG = np.zeros((y.size, n, n, n), dtype=complex)
        ddG = np.zeros((y.size, n, n, n, n), dtype=complex)
        cache: Dict[Tuple[int, ...], np.ndarray] = {}

        def part(idx):
            key = tuple(sorted(idx))
            if key not in cache:
                cache[key] = self._partial(U, key)
            return cache[key]

        for k, i, j in product(range(n), repeat=3):
            dG[:, k, i, j] = 0.125 * part((i, j, k))
        for k, l, i, j in product(range(n), repeat=4):
            ddG[:, k, l, i, j] = part((i, j, k, l)) / 16.0
        return G, dG, ddG

    def initial_state(self) -> np.ndarray:
        return self.u0.ravel().copy()

    def initial_class(self) -> KahlerClassVector:
        return make_class(self.initial.kahler_class())

    def rhs(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        G = self._metric(t, y, normalized)
        sign, logdet = np.linalg.slogdet(G)
        base = np.linalg.slogdet(self._base(t, normalized))[1]
        out = np.where(sign > 0, logdet - base, np.nan)
        return out - y if normalized else out

    def _relative(self, G: np.ndarray) -> np.ndarray:
        Linv = np.linalg.inv(self.L_hat)
        M = Linv @ G @ np.conj(np.swapaxes(Linv, -1, -2))
        return np.linalg.eigvalsh(0.5 * (M + np.conj(np.swapaxes(M, -1, -2))))

    def min_eig(self, t: float, y: np.ndarray, normalized: bool = False) -> float:
        return float(np.min(self._relative(self._metric(t, y, normalized))))

    def integrate(self, G: np.ndarray, f: np.ndarray) -> float:
        density = math.factorial(self.n) * 2.0 ** self.n * np.linalg.det(G).real
        return float(self.cell_weight * np.sum(f * density))

    def trace_field(self, t: float, y: np.ndarray, normalized: bool = False) -> np.ndarray:
        G = self._metric(t, y, normalized)
        return np.einsum("nji,nij->n", np.linalg.inv(G), self.G_hat)

    def laplacian(self, t: float, y: np.ndarray, f: np.ndarray, normalized: bool = False) -> np.ndarray:
        """只依赖 x 的函数：tr(G^-1 1/4 Hess_x f)"""
        G = self._metric(t, y, normalized)
        F = f.reshape(self.shape)
        n = self.n
        hess = np.empty((f.size, n, n))
        for i in range(n):
            for j in range(i, n):
                hess[:, i, j] = hess[:, j, i] = 0.25 * self._partial(F, (i, j))
        return np.einsum("nji,nij->n", np.linalg.inv(G), hess)

    def interior(self) -> np.ndarray:
        return np.ones(self.points.shape[0], dtype=bool)

    def diagnostics(self, t: float, y: np.ndarray, normalized: bool = False, warm=None):
        G, dG, ddG = self.jet(t, y, normalized)
        curv = curvature_from_jet(self.points, G, dG, ddG)
        estimate = estimate_from_curvature(curv, restarts=FLOW_PARAMS["HSC_RESTARTS"], warm_start=warm)
        S = curv.S
        ric_omega = form_norm_sq(curv, curv.ric + curv.G)
        out = {
            "sup_H": estimate.value,
            "M_t": float(np.max(self.trace_field(t, y, normalized))),
            "min_eig": self.min_eig(t, y, normalized),
            "vol": self.integrate(curv.G, np.ones(curv.size)),
            "S_int": self.integrate(curv.G, S),
            "ric_plus_omega_sq_int": self.integrate(curv.G, ric_omega),
            "S_sq_int": self.integrate(curv.G, S ** 2),
            "sup_S": float(np.max(np.abs(S))),
            "sup_rm": float(np.sqrt(np.max(curvature_norm_sq(curv)))),
            "class_coeff": float(self.initial_class().as_float()[0] * (math.exp(-t) if normalized else 1.0)),
        }
        return out, estimate.directions
