"""
流监视器 - 存在时间、迹界、爆破速率、积分恒等式与上同调一致性检查
"""

import logging
import math
from typing import List, Optional

import numpy as np

from config import FLOW_PARAMS, TOLERANCES
from errors import InvalidInputError, PreconditionError
from chern.expansion import class_decay_check
from flows.krf import FlowTrajectory
from manifolds.classes import make_class, numerical_kodaira_dimension
from components.reports import CheckReport, create_report, error_report, skipped_report

logger = logging.getLogger(__name__)


def existence_bound_check(traj: FlowTrajectory, A: float, delta: Optional[float] = None) -> CheckReport:
    """
    存在时间下界：流在 t < 1/(nA) - delta 上非奇异

    Args:
        traj: run_krf 的轨迹
        A: 初始度量的 sup H（须 > 0）
        delta: 相对余量，默认 TOLERANCES["EXISTENCE_DELTA"]
    """
    if delta is None:
        delta = TOLERANCES["EXISTENCE_DELTA"]
    if not A > 0:
        return error_report("existence", f"existence bound needs A > 0 (got {A})")
    n = traj.n
    bound = 1.0 / (n * A)
    required = bound * (1.0 - delta)
    reached = traj.T_num if traj.singular else max(traj.T_num, traj.horizon)
    if not traj.singular and traj.horizon < required:
        message = f"no singularity before horizon {traj.horizon:.4g} (< bound {bound:.4g})"
    else:
        message = f"T_num = {traj.T_num:.6g}, bound 1/(nA) = {bound:.6g}"
    passed = (not traj.singular) or traj.T_num >= required
    return create_report(
        "existence",
        passed,
        measured={"T_num": traj.T_num, "singular": traj.singular, "trigger": traj.trigger,
                  "confidence": traj.confidence, "ratio_T_nA": reached * n * A},
        bounds={"bound": bound, "A": A},
        tolerance=delta,
        slack=reached / bound - 1.0,
        provenance=[f"{traj.kind} ansatz", "RK45 singular-time detection"],
        message=message,
    )


def trace_bound_monitor(traj: FlowTrajectory, A: float, tol: Optional[float] = None) -> CheckReport:
    """
    M(t) = max tr_{omega(t)} omega_hat <= n / (1 - nAt)，t 限于 [0, min(T_num, 1/(nA)))

    Returns:
        报告；measured["worst_violation"] 为最大相对超出量
    """
    if tol is None:
        tol = TOLERANCES["TRACE_BOUND_REL"]
    n = traj.n
    t = traj.column("t")
    M = traj.column("M_t")
    limit = traj.T_num
    if A > 0:
        limit = min(limit, 1.0 / (n * A))
    mask = t < limit
    bound = n / (1.0 - n * A * t[mask])
    ratio = M[mask] / bound - 1.0
    worst = float(np.max(ratio)) if ratio.size else 0.0
    return create_report(
        "trace_bound",
        worst <= tol,
        measured={"worst_violation": worst, "snapshots": int(mask.sum()), "M_max": float(np.max(M[mask])) if ratio.size else None},
        bounds={"A": A, "t_limit": limit},
        tolerance=tol,
        slack=tol - worst,
        provenance=["maximum principle bound on the trace"],
        message=f"worst relative violation {worst:.3e}",
    )


def blowup_rate_check(traj: FlowTrajectory, delta: Optional[float] = None) -> CheckReport:
    """
    爆破速率 min_{t <= 0.9 T} (T - t) sup H(t) >= 1/n

    Raises:
        PreconditionError: 轨迹没有有限时间奇异
    """
    if delta is None:
        delta = TOLERANCES["BLOWUP_DELTA"]
    if not traj.singular:
        raise PreconditionError("blow-up rate needs a finite-time singularity before the horizon")
    T = traj.T_num
    t = traj.column("t")
    H = traj.column("sup_H")
    mask = t <= FLOW_PARAMS["BLOWUP_WINDOW"] * T
    if not np.any(mask):
        raise InvalidInputError("no snapshots inside the blow-up window")
    products = (T - t[mask]) * H[mask]
    worst = float(np.min(products))
    target = 1.0 / traj.n
    return create_report(
        "blowup_rate",
        worst >= target * (1.0 - delta),
        measured={"min_product": worst, "max_product": float(np.max(products)), "T_num": T,
                  "confidence": traj.confidence},
        bounds={"lower": target},
        tolerance=delta,
        slack=worst / target - 1.0,
        provenance=["snapshot sup H", "detected singular time"],
        message=f"min (T-t) sup H = {worst:.6g}",
    )


def cohomology_consistency(traj: FlowTrajectory, tol: Optional[float] = None) -> CheckReport:
    """求积体积与类演化规律的最大相对偏差"""
    if tol is None:
        tol = TOLERANCES["CLASS_VOLUME_REL"]
    vol = traj.column("vol")
    expected = traj.column("expected_vol")
    mask = expected > 0
    gaps = np.abs(vol[mask] - expected[mask]) / expected[mask]
    worst = float(np.max(gaps)) if gaps.size else 0.0
    return create_report(
        "cohomology",
        worst <= tol,
        measured={"max_relative_gap": worst, "snapshots": int(mask.sum())},
        bounds={"law": "normalized_flow_class" if traj.normalized else "flow_class"},
        tolerance=tol,
        slack=tol - worst,
        provenance=["quadrature volume", "exact class arithmetic"],
        message=f"max relative gap {worst:.3e}",
    )


def trace_evolution_check(traj: FlowTrajectory, A: float, tol: Optional[float] = None) -> CheckReport:
    """
    (d/dt - Laplacian) tr omega_hat <= A (tr omega_hat)^2，在内部节点上离散检验

    取相邻快照间的积分形式：差商对比拉普拉斯与右端的梯形平均。
    """
    if tol is None:
        tol = TOLERANCES["TRACE_EVOLUTION"]
    if traj.normalized:
        return skipped_report("trace_evolution", "inequality is stated for the unnormalized flow")
    ansatz = traj.ansatz
    if ansatz is None or len(traj.states) < 2:
        return skipped_report("trace_evolution", "needs the ansatz and at least two snapshot states")
    interior = ansatz.interior()
    times = traj.times
    traces = [ansatz.trace_field(t, y) for t, y in zip(times, traj.states)]
    laplacians = [ansatz.laplacian(t, y, tr) for t, y, tr in zip(times, traj.states, traces)]
    worst = -math.inf
    for k in range(len(traj.states) - 1):
        dt = times[k + 1] - times[k]
        heat = (traces[k + 1] - traces[k]) / dt - 0.5 * (laplacians[k] + laplacians[k + 1])
        rhs = 0.5 * A * (traces[k] ** 2 + traces[k + 1] ** 2)
        excess = (heat - rhs) / np.maximum(1.0, np.abs(rhs))
        worst = max(worst, float(np.max(excess[interior])))
    return create_report(
        "trace_evolution",
        worst <= tol,
        measured={"max_scaled_excess": worst, "intervals": len(traj.states) - 1},
        bounds={"A": A},
        tolerance=tol,
        slack=tol - worst,
        provenance=[f"{traj.kind} ansatz interior nodes", "trapezoidal time integration between snapshots"],
        message=f"max scaled excess {worst:.3e}",
    )


def _decay_exponent(times: np.ndarray, values: np.ndarray) -> float:
    """log|L| 对 t 的最小二乘斜率取负"""
    slope = np.polyfit(times, np.log(np.abs(values)), 1)[0]
    return float(-slope)


def flow_functional_monitor(
    traj: FlowTrajectory,
    nu: Optional[int] = None,
    tol: Optional[float] = None,
) -> List[CheckReport]:
    """
    归一化流的积分量监视

    (i) int|Ric+w|^2 = d/dt int S + int S^2 + (n+1) int S + n Vol（中心差分，内部快照）
    (ii) L(t) = e^((n-nu-2)t) int S w^n 的衰减指数 >= 2；nu 未定义时跳过
    (iii) sup |S| 只报告不断言；模型带类数据时附上类层面的衰减检查

    Args:
        traj: run_normalized_krf 的轨迹
        nu: 数值小平维数；None 时由模型推断（K_X 非 nef 时无定义）

    Raises:
        InvalidInputError: 快照少于 3 个或轨迹不是归一化流
    """
    if tol is None:
        tol = TOLERANCES["FUNCTIONAL_IDENTITY"]
    if len(traj.frame) < 3:
        raise InvalidInputError("flow functional monitor needs at least three snapshots")
    if not traj.normalized:
        raise InvalidInputError("flow functional monitor needs a normalized-flow trajectory")
    n = traj.n
    t = traj.column("t")
    S_int = traj.column("S_int")
    lhs = traj.column("ric_plus_omega_sq_int")
    dS = (S_int[2:] - S_int[:-2]) / (t[2:] - t[:-2])
    rhs = dS + traj.column("S_sq_int")[1:-1] + (n + 1) * S_int[1:-1] + n * traj.column("vol")[1:-1]
    inner = lhs[1:-1]
    errors = np.abs(inner - rhs) / np.maximum(np.abs(inner), 1e-300)
    worst = float(np.max(errors))
    reports = [create_report(
        "flow_identity",
        worst <= tol,
        measured={"max_relative_error": worst, "sup_S": float(np.max(traj.column("sup_S")))},
        bounds={"identity": "int|Ric+w|^2 = dS_int/dt + int S^2 + (n+1) int S + n Vol"},
        tolerance=tol,
        slack=tol - worst,
        provenance=["snapshot integrals", "central time differences"],
        message=f"max relative error {worst:.3e} over {inner.size} interior snapshots",
    )]

    spec = traj.ansatz.spec if traj.ansatz is not None else None
    if nu is None and spec is not None:
        try:
            nu = numerical_kodaira_dimension(spec)
        except InvalidInputError as exc:
            logger.debug("numerical dimension undefined: %s", exc)
    if nu is None:
        reports.append(skipped_report("flow_decay", "K_X not nef: numerical Kodaira dimension undefined"))
        return reports

    L = np.exp((n - nu - 2) * t) * S_int
    zero = TOLERANCES["ZERO"] * max(1.0, float(np.max(traj.column("vol"))))
    if float(np.max(np.abs(L))) <= zero:
        reports.append(create_report(
            "flow_decay", True,
            measured={"sup_abs_L": float(np.max(np.abs(L))), "nu": nu},
            bounds={"exponent_min": 2},
            tolerance=zero, slack=zero - float(np.max(np.abs(L))),
            provenance=["snapshot integrals"],
            message="L(t) vanishes identically",
        ))
    else:
        exponent = _decay_exponent(t, L)
        dtol = TOLERANCES["DECAY_RATE"]
        reports.append(create_report(
            "flow_decay",
            exponent >= 2.0 - dtol,
            measured={"exponent": exponent, "nu": nu, "L_first": float(L[0]), "L_last": float(L[-1])},
            bounds={"exponent_min": 2},
            tolerance=dtol,
            slack=exponent - 2.0,
            provenance=["least-squares fit of log|L(t)|"],
            message=f"L(t) ~ e^(-{exponent:.3f} t)",
        ))
    if spec is not None and spec.n >= 1:
        alpha = make_class(traj.ansatz.initial_class().coeffs, exact=True)
        reports.append(class_decay_check(spec, alpha, nu, list(t)))
    return reports
