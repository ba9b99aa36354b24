"""
Wu-Yau 连续性方程 - Ric(w(t)) = -w(t) + t w_ref 的阻尼 Newton 求解与参数延拓
"""

import logging
import math
from typing import Dict, List, Optional, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from config import CONTINUITY_PARAMS, TOLERANCES
from errors import InfeasibleError, InvalidInputError, NonConvergenceError
from flows.ansatz import RadialAnsatz, TubeAnsatz
from geometry.metrics import MetricField, RadialMetric, TorusMetric
from geometry.stencils import derivative_matrix
from manifolds.classes import (
    KahlerClassVector, canonical_class, class_pairing, is_kahler, make_class,
)
from manifolds.spec import ManifoldSpec
from components.reports import CheckReport, create_report, error_report

logger = logging.getLogger(__name__)


@dataclass
class ContinuitySolution:
    """
    连续性方程在参数 t 处的解

    state: 径向时为动量剖面 v，管状时为 W = t psi + log det G_ref + u
    potential: w(t) = t w_ref - Ric(w_ref) + i ddbar u 中的 u（网格值）
    residual: sup |Ric + w - t w_ref| / |t w_ref|（相对 w_ref 的特征值）
    """
    t: float
    kind: str
    n: int
    spec: ManifoldSpec
    reference: MetricField
    state: np.ndarray
    potential: np.ndarray
    residual: float
    residuals: List[float] = field(default_factory=list)
    damping: List[float] = field(default_factory=list)
    converged: bool = False
    trace: Optional[np.ndarray] = None
    ref_norm_sq: Optional[np.ndarray] = None
    eig_range: tuple = (math.nan, math.nan)
    volume: float = math.nan
    expected_volume: float = math.nan
    class_coeff: Optional[np.ndarray] = None
    expected_class: Optional[KahlerClassVector] = None
    ric_plus_omega_sq_int: float = math.nan
    ref_sup_h: float = math.nan

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    def summary(self) -> Dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "residual": self.residual,
            "iterations": self.iterations,
            "max_trace": float(np.max(self.trace)),
            "max_ref_norm_sq": float(np.max(self.ref_norm_sq)),
            "min_eig": self.eig_range[0],
            "max_eig": self.eig_range[1],
            "volume": self.volume,
            "expected_volume": self.expected_volume,
            "class_coeff": self.class_coeff,
            "expected_class": self.expected_class.as_float(),
            "ref_sup_h": self.ref_sup_h,
        }


# =============================================================================
# 约化问题
# =============================================================================

class _RadialProblem:
    """
    U(n) 不变情形，未知量为动量 v

    Ric 的动量为 -L(v)，方程化为 F(v) = L(v) - v + t v_ref = 0。
    """

    kind = "projective_radial"

    def __init__(self, reference: RadialMetric, t: float, grid: int):
        self.ansatz = RadialAnsatz(reference.n, initial=reference, grid=grid)
        self.n = reference.n
        self.spec = self.ansatz.spec
        self.t = t
        a = self.ansatz
        self.v_ref = a.v_hat
        self.v_ref_t = a.v_hat_t
        self.D1 = derivative_matrix(grid, 1, a.h, "reflect")
        self.D2 = derivative_matrix(grid, 2, a.h, "reflect")
        self.scale = t * float(np.max(np.abs(self.v_ref)))

    def reference_state(self) -> np.ndarray:
        """u = 0：w = t w_ref - Ric(w_ref)"""
        return self.t * self.v_ref + self.ansatz.operator(self.v_ref)

    def scaled_state(self, ratio: float) -> np.ndarray:
        return ratio * self.v_ref

    def residual(self, v: np.ndarray) -> np.ndarray:
        return self.ansatz.operator(v) - v + self.t * self.v_ref

    def jacobian(self, v: np.ndarray) -> sparse.csr_matrix:
        a = self.ansatz
        v1, v2 = a._d(v, 1), a._d(v, 2)
        half = 0.5 * a.sin
        J = sparse.diags(half / v1) @ self.D2 - sparse.diags(half * v2 / v1 ** 2) @ self.D1
        if self.n > 1:
            J = J + (self.n - 1) * (sparse.diags(half / v) @ self.D1 - sparse.diags(half * v1 / v ** 2))
        return (J - sparse.identity(v.size)).tocsc()

    def positive(self, v: np.ndarray) -> bool:
        return bool(np.all(v > 0) and np.all(self.ansatz._d(v, 1) > 0))

    def relative_eigenvalues(self, v: np.ndarray) -> np.ndarray:
        """w(t) 相对 w_ref 的特征值：径向 v'/v_ref'，切向 v/v_ref"""
        radial = self.ansatz._d(v, 1) / self.v_ref_t
        if self.n == 1:
            return radial[:, None]
        return np.stack([radial, v / self.v_ref], axis=1)

    def finish(self, v: np.ndarray) -> Dict:
        a, n, t = self.ansatz, self.n, self.t
        v1 = a._d(v, 1)
        eta = -self.residual(v)
        err = np.maximum(np.abs(a._d(eta, 1) / self.v_ref_t), np.abs(eta / self.v_ref) if n > 1 else 0.0)
        lam_r = self.v_ref_t / v1
        lam_a = self.v_ref / v
        trace = lam_r + (n - 1) * lam_a
        norm_sq = lam_r ** 2 + (n - 1) * lam_a ** 2
        # Ric + w 的动量为 v - L(v)
        rho = v - a.operator(v)
        e_r = a._d(rho, 1) / v1
        e_a = rho / v
        ric_omega = e_r ** 2 + (n - 1) * e_a ** 2
        ratio = (v1 / self.v_ref_t) * (v / self.v_ref) ** (n - 1)
        return {
            "residual": float(np.max(err)) / t,
            "trace": trace,
            "ref_norm_sq": norm_sq,
            "potential": np.log(ratio),
            "volume": a.integrate(v, np.ones(v.size)),
            "class_coeff": a.class_coefficients(v),
            "ric_plus_omega_sq_int": a.integrate(v, ric_omega),
        }

    def reference_sup_h(self) -> float:
        return float(np.max(self.ansatz.hsc_max(self.ansatz.curvature_profile(self.v_ref))))


class _TubeProblem:
    """
    环面管状情形，未知量 W = t psi + log det G_ref + u

    方程 det(t g0 + 1/4 Hess W) = e^u det G_ref 化为
    F(W) = log det(t g0 + 1/4 Hess W) - W + t psi = 0。
    """

    kind = "torus_tube"

    def __init__(self, reference: TorusMetric, t: float, grid: int):
        self.ansatz = TubeAnsatz(reference.spec, initial=reference, grid=grid)
        a = self.ansatz
        self.n = a.n
        self.spec = a.spec
        self.t = t
        self.psi = a.u0.ravel()
        self.G_ref = a.G_hat
        self.L_ref = a.L_hat
        self.log_ref = np.linalg.slogdet(self.G_ref)[1]
        self.hess_ops = self._hessian_operators(a.grid, a.h)
        self.scale = 1.0

    def _hessian_operators(self, grid: int, h) -> Dict:
        n = self.n
        eye = sparse.identity(grid, format="csr")
        ops = {}
        for i in range(n):
            for j in range(i, n):
                factors = []
                for axis in range(n):
                    order = (axis == i) + (axis == j)
                    factors.append(derivative_matrix(grid, order, h[axis], "wrap") if order else eye)
                op = factors[0]
                for f in factors[1:]:
                    op = sparse.kron(op, f, format="csr")
                ops[(i, j)] = op
        return ops

    def metric(self, W: np.ndarray) -> np.ndarray:
        return self.ansatz._metric(0.0, W, False) + (self.t - 1.0) * self.ansatz.g0

    def reference_state(self) -> np.ndarray:
        return self.t * self.psi + self.log_ref

    def scaled_state(self, ratio: float) -> np.ndarray:
        # W = ratio psi 给出 G = ratio G_ref
        return ratio * self.psi

    def residual(self, W: np.ndarray) -> np.ndarray:
        sign, logdet = np.linalg.slogdet(self.metric(W))
        return np.where(sign > 0, logdet, np.nan) - W + self.t * self.psi

    def jacobian(self, W: np.ndarray) -> sparse.csc_matrix:
        Ginv = np.linalg.inv(self.metric(W))
        J = -sparse.identity(W.size, format="csr")
        for (i, j), op in self.hess_ops.items():
            weight = 0.25 * Ginv[:, j, i] * (1.0 if i == j else 2.0)
            J = J + sparse.diags(weight) @ op
        return J.tocsc()

    def positive(self, W: np.ndarray) -> bool:
        return bool(np.all(np.linalg.eigvalsh(self.metric(W)) > 0))

    def _relative(self, M: np.ndarray) -> np.ndarray:
        Linv = np.linalg.inv(self.L_ref)
        R = Linv @ M @ np.swapaxes(Linv, -1, -2).conj()
        return np.linalg.eigvalsh(0.5 * (R + np.swapaxes(R, -1, -2).conj()))

    def relative_eigenvalues(self, W: np.ndarray) -> np.ndarray:
        return self._relative(self.metric(W).astype(complex))

    def finish(self, W: np.ndarray) -> Dict:
        a, t = self.ansatz, self.t
        G = self.metric(W)
        Ginv = np.linalg.inv(G)
        logdet = np.linalg.slogdet(G)[1]
        ric = -a._metric(0.0, logdet, False) + a.g0
        form = ric + G
        err = np.max(np.abs(self._relative((form - t * self.G_ref.real).astype(complex))))
        M = np.einsum("nij,njk->nik", Ginv, self.G_ref.real)
        P = np.einsum("nij,njk->nik", Ginv, form)
        return {
            "residual": float(err) / t,
            "trace": np.einsum("nii->n", M),
            "ref_norm_sq": np.einsum("nij,nji->n", M, M),
            "potential": W - t * self.psi - self.log_ref,
            "volume": a.integrate(G, np.ones(W.size)),
            "class_coeff": t * a.initial_class().as_float(),
            "ric_plus_omega_sq_int": a.integrate(G, np.einsum("nij,nji->n", P, P)),
        }

    def reference_sup_h(self) -> float:
        diag, _ = self.ansatz.diagnostics(0.0, self.ansatz.initial_state())
        return diag["sup_H"]


def _problem(reference: MetricField, t: float, grid: Optional[int]):
    if isinstance(reference, RadialMetric):
        if grid is None:
            grid = CONTINUITY_PARAMS["RADIAL_GRID"]
        return _RadialProblem(reference, t, grid)
    if isinstance(reference, TorusMetric):
        if grid is None:
            grid = CONTINUITY_PARAMS["TUBE_GRID"]
        return _TubeProblem(reference, t, grid)
    raise InvalidInputError(f"no continuity ansatz for metric '{reference.label}'")


def continuity_class(spec: ManifoldSpec, reference: MetricField, t: float) -> KahlerClassVector:
    """t [w_ref] + 2 pi c1(K_X)"""
    return make_class(reference.kahler_class()) * t + canonical_class(spec) * (2.0 * math.pi)


# =============================================================================
# 求解
# =============================================================================

def _newton(problem, state: np.ndarray, tol: float) -> tuple:
    """阻尼 Newton + Armijo 回溯；返回 (解, 残差记录, 阻尼记录, 是否收敛)"""
    max_iter = CONTINUITY_PARAMS["NEWTON_MAX_ITER"]
    armijo = CONTINUITY_PARAMS["ARMIJO"]
    step_tol = CONTINUITY_PARAMS["STEP_TOL"]
    F = problem.residual(state)
    norm = float(np.max(np.abs(F))) / problem.scale
    residuals, damping = [norm], []
    for it in range(max_iter):
        if norm <= tol:
            return state, residuals, damping, True
        delta = splinalg.spsolve(problem.jacobian(state), -F)
        merit = float(np.dot(F, F))
        lam = 1.0
        for _ in range(CONTINUITY_PARAMS["MAX_HALVINGS"]):
            trial = state + lam * delta
            if problem.positive(trial):
                F_trial = problem.residual(trial)
                if np.all(np.isfinite(F_trial)) and float(np.dot(F_trial, F_trial)) <= (1.0 - 2.0 * armijo * lam) * merit:
                    break
            lam *= 0.5
        else:
            logger.debug("line search exhausted at iteration %d (residual %.3e)", it, norm)
            return state, residuals, damping, False
        state, F = trial, F_trial
        norm = float(np.max(np.abs(F))) / problem.scale
        residuals.append(norm)
        damping.append(lam)
        logger.debug("newton %d: residual %.3e, damping %.3g", it + 1, norm, lam)
        if lam * float(np.max(np.abs(delta))) <= step_tol * max(1.0, float(np.max(np.abs(state)))):
            return state, residuals, damping, True
    return state, residuals, damping, norm <= tol


def wu_yau_solve(
    reference: MetricField,
    t: float,
    grid: Optional[int] = None,
    guess: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> ContinuitySolution:
    """
    求解 Ric(w) = -w + t w_ref

    等价的标量方程 (t w_ref - Ric(w_ref) + i ddbar u)^n = e^u w_ref^n 在约化网格上用阻尼
    Newton 迭代求解。初值为 u = 0；其不正定时改用同类的 w_ref 倍数。

    Args:
        reference: RadialMetric（CP^n）或 TorusMetric（管状环面）
        t: 参数
        grid: 网格大小
        guess: 初始状态（延拓时为上一个解的 state）
        tol: Newton 相对残差阈值

    Returns:
        ContinuitySolution

    Raises:
        InfeasibleError: t [w_ref] + 2 pi c1(K_X) 不是凯勒类
        NonConvergenceError: Newton 不收敛
    """
    if tol is None:
        tol = CONTINUITY_PARAMS["NEWTON_TOL"]
    if not t > 0:
        raise InvalidInputError(f"continuity parameter must be positive, got {t}")
    problem = _problem(reference, float(t), grid)
    spec = problem.spec
    target = continuity_class(spec, reference, t)
    if not is_kahler(spec, target):
        raise InfeasibleError(f"class {target.as_float().tolist()} at t={t} is not Kaehler on {spec.describe()}")

    if guess is None:
        guess = problem.reference_state()
        if not problem.positive(guess):
            ratio = float(target.as_float()[0] / reference.kahler_class()[0])
            guess = problem.scaled_state(ratio)
    state, residuals, damping, converged = _newton(problem, np.asarray(guess, dtype=float), tol)
    if not converged:
        raise NonConvergenceError(
            f"Newton did not converge at t={t} (residual {residuals[-1]:.3e})", residuals, damping,
        )
    logger.info("wu-yau t=%.6g: %d Newton steps, residual %.3e", t, len(damping), residuals[-1])

    info = problem.finish(state)
    eig = problem.relative_eigenvalues(state)
    return ContinuitySolution(
        t=float(t),
        kind=problem.kind,
        n=problem.n,
        spec=spec,
        reference=reference,
        state=state,
        potential=info["potential"],
        residual=info["residual"],
        residuals=residuals,
        damping=damping,
        converged=converged,
        trace=info["trace"],
        ref_norm_sq=info["ref_norm_sq"],
        eig_range=(float(np.min(eig)), float(np.max(eig))),
        volume=info["volume"],
        expected_volume=float(class_pairing(spec, [target] * spec.n)),
        class_coeff=info["class_coeff"],
        expected_class=target,
        ric_plus_omega_sq_int=info["ric_plus_omega_sq_int"],
        ref_sup_h=problem.reference_sup_h(),
    )


def wu_yau_continuation(
    reference: MetricField,
    ts: Sequence[float],
    grid: Optional[int] = None,
) -> List[ContinuitySolution]:
    """
    从最大的 t 开始向下延拓，每个解以上一个解为初值

    Returns:
        按 t 降序排列的解
    """
    solutions: List[ContinuitySolution] = []
    guess = None
    for t in sorted(ts, reverse=True):
        solution = wu_yau_solve(reference, t, grid=grid, guess=guess)
        solutions.append(solution)
        guess = solution.state
    return solutions


def newton_convergence(
    residuals: Sequence[float],
    damping: Sequence[float],
    C: Optional[float] = None,
    floor: Optional[float] = None,
) -> Dict:
    """
    Newton 残差记录的二次收敛比值检验

    只看无阻尼步 r_k -> r_{k+1}：要求 r_{k+1} <= max(C r_k^2, floor)。
    阶数 log(r_{k+1}/r_k) / log(r_k/r_{k-1}) 取最后一组连续两个无阻尼步且三项均高于 floor 的估计。

    Returns:
        {"quadratic", "worst_ratio", "order", "undamped_steps"}；无可用步时 worst_ratio、order 为 None
    """
    if C is None:
        C = CONTINUITY_PARAMS["QUADRATIC_C"]
    if floor is None:
        floor = CONTINUITY_PARAMS["RESIDUAL_FLOOR"]
    r = np.asarray(residuals, dtype=float)
    undamped = [k for k, lam in enumerate(damping) if lam == 1.0 and k + 1 < r.size]
    quadratic, ratios = True, []
    for k in undamped:
        if r[k] <= floor:
            continue
        if r[k + 1] > max(C * r[k] ** 2, floor):
            quadratic = False
        if r[k + 1] > floor:
            ratios.append(r[k + 1] / r[k] ** 2)
    order = None
    for k in undamped:
        if k - 1 in undamped and min(r[k - 1], r[k], r[k + 1]) > floor and r[k - 1] > r[k]:
            order = float(math.log(r[k + 1] / r[k]) / math.log(r[k] / r[k - 1]))
    return {
        "quadratic": quadratic,
        "worst_ratio": float(max(ratios)) if ratios else None,
        "order": order,
        "undamped_steps": len(undamped),
    }


def solution_check(solution: ContinuitySolution, tol: Optional[float] = None) -> CheckReport:
    """方程残差、类与体积的证书"""
    if tol is None:
        tol = TOLERANCES["WY_RESIDUAL_REL"]
    newton = newton_convergence(solution.residuals, solution.damping)
    class_tol = TOLERANCES["CLASS_VOLUME_REL"]
    expected = solution.expected_class.as_float()
    class_gap = float(np.max(np.abs(solution.class_coeff - expected) / np.maximum(np.abs(expected), 1.0)))
    volume_gap = abs(solution.volume - solution.expected_volume) / solution.expected_volume
    passed = solution.residual <= tol and class_gap <= class_tol and volume_gap <= class_tol and newton["quadratic"]
    return create_report(
        "wu_yau",
        passed,
        measured={"residual": solution.residual, "class_gap": class_gap, "volume_gap": volume_gap,
                  "newton_residuals": solution.residuals, "damping": solution.damping, "t": solution.t,
                  "newton_quadratic": newton["quadratic"], "newton_worst_ratio": newton["worst_ratio"],
                  "newton_order": newton["order"]},
        bounds={"residual": tol, "class": expected, "volume": solution.expected_volume,
                "quadratic_c": CONTINUITY_PARAMS["QUADRATIC_C"]},
        tolerance=tol,
        slack=tol - solution.residual,
        provenance=[f"{solution.kind} Newton solve", "exact class arithmetic"],
        message=f"t={solution.t:g}: residual {solution.residual:.3e} after {solution.iterations} steps",
    )


def trace_estimate_check(
    solution: ContinuitySolution,
    mu: float,
    eps: float,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    在 t = n mu + 2n eps 处检查 tr_{w(t)} w_ref <= 1/eps 与 |w_ref|^2_{w(t)} <= n/eps^2

    前提：调用方保证 sup H(w_ref) <= mu + eps；测得的 sup H 若超出则返回 ERROR 报告。
    """
    if tol is None:
        tol = TOLERANCES["WY_CERTIFICATE"]
    n = solution.n
    if not eps > 0:
        return error_report("trace_estimate", f"eps must be positive, got {eps}")
    expected_t = n * mu + 2 * n * eps
    if abs(solution.t - expected_t) > 1e-9 * max(1.0, expected_t):
        return error_report("trace_estimate", f"solution at t={solution.t:g}, expected n mu + 2n eps = {expected_t:g}")
    if solution.ref_sup_h > mu + eps + TOLERANCES["HSC_BOUND"]:
        return error_report(
            "trace_estimate",
            f"precondition violated: sup H(w_ref) = {solution.ref_sup_h:.6g} > mu + eps = {mu + eps:.6g}",
            measured={"ref_sup_h": solution.ref_sup_h},
        )
    max_trace = float(np.max(solution.trace))
    max_norm = float(np.max(solution.ref_norm_sq))
    trace_bound, norm_bound = 1.0 / eps, n / eps ** 2
    slack = min(1.0 - max_trace / trace_bound, 1.0 - max_norm / norm_bound)
    return create_report(
        "trace_estimate",
        slack >= -tol,
        measured={"max_trace": max_trace, "max_ref_norm_sq": max_norm, "ref_sup_h": solution.ref_sup_h},
        bounds={"trace": trace_bound, "ref_norm_sq": norm_bound, "mu": mu, "eps": eps},
        tolerance=tol,
        slack=slack,
        provenance=[f"{solution.kind} Newton solve"],
        message=f"max tr = {max_trace:.6g} <= {trace_bound:.6g}",
    )
