"""
任务组件 - 把场景分派到各模块，汇集检查报告与输出数据
"""

import logging
import math
from typing import Callable, Dict, List, Optional
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config import FLOW_PARAMS, TOLERANCES
from errors import GeometryLabError, InvalidInputError, ScenarioError
from chern.defects import cw_inequality_audit, my_defect_check, my_defect_weighted
from chern.expansion import EXPANSION_VARIANTS, asymptotic_expansion_check, class_decay_check
from chern.forms import chern_forms, chern_numbers_check
from continuity.families import my_family_construct
from continuity.wu_yau import ContinuitySolution, solution_check, trace_estimate_check, wu_yau_continuation, wu_yau_solve
from data.scenarios import Scenario, default_metric, load_trajectory
from data.writers import curvature_frame
from flows.ansatz import FlowAnsatz, RadialAnsatz, TubeAnsatz
from flows.krf import FlowTrajectory, run_krf, run_normalized_krf
from flows.monitors import (
    blowup_rate_check, cohomology_consistency, existence_bound_check, flow_functional_monitor,
    trace_bound_monitor, trace_evolution_check,
)
from geometry.bounds import (
    berger_identity_check, product_hsc_check, rational_curve_bound_check, royden_bound_check,
    royden_refined_check, simultaneous_frame,
)
from geometry.curvature import curvature_field, fd_convergence_order, hsc, kahler_symmetry_check, sup_rm_norm
from geometry.hsc_search import estimate_from_curvature
from geometry.metrics import MetricField, ProductMetric, RadialMetric, TorusMetric
from geometry.mu import mu_lower_bound, mu_sandwich_check, mu_upper_search
from manifolds.classes import (
    canonical_class, class_pairing, is_nef, make_class, nef_threshold, normalized_nef_threshold,
    property_A_limit_check,
)
from manifolds.quadrature import build_atlas, integrate
from manifolds.spec import ManifoldSpec
from components.reports import CheckReport, create_report, error_report, skipped_report

logger = logging.getLogger(__name__)


@dataclass
class TaskResult:
    """一个场景的全部结果"""
    reports: List[CheckReport] = field(default_factory=list)
    trajectories: Dict[str, FlowTrajectory] = field(default_factory=dict)
    solutions: List[ContinuitySolution] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)


class Tolerances:
    """按 --tolerance-scale 缩放后的容差"""

    def __init__(self, scale: float = 1.0):
        if not scale > 0:
            raise InvalidInputError(f"tolerance scale must be positive, got {scale}")
        self.scale = float(scale)

    def __getitem__(self, key: str) -> float:
        return TOLERANCES[key] * self.scale

    def value(self, raw: float) -> float:
        return float(raw) * self.scale


# =============================================================================
# 辅助
# =============================================================================

def _require_metric(scenario: Scenario) -> MetricField:
    if scenario.metric is None:
        raise ScenarioError(scenario.path, "metric", f"{scenario.spec.describe()} has no computable metric")
    return scenario.metric


def _is_flat(metric: MetricField) -> bool:
    if isinstance(metric, TorusMetric):
        return not metric.modes
    if isinstance(metric, ProductMetric):
        return all(_is_flat(f) for f in metric.factors)
    return False


def expectation_report(measured: Dict[str, float], expect: Dict[str, float], tol: float, source: str) -> CheckReport:
    """测得量与闭式值的逐项比较（绝对误差）"""
    errors = {}
    for key, target in expect.items():
        if key not in measured:
            return error_report("expected_values", f"no measured quantity '{key}'", bounds=dict(expect))
        errors[key] = abs(float(measured[key]) - float(target))
    worst = max(errors.values()) if errors else 0.0
    return create_report(
        "expected_values",
        worst <= tol,
        measured={k: measured[k] for k in expect},
        bounds=dict(expect),
        tolerance=tol,
        slack=tol - worst,
        provenance=[source],
        message=", ".join(f"{k}: err {v:.2e}" for k, v in errors.items()),
    )


def _random_directions(n: int, size: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((size, count, n)) + 1j * rng.standard_normal((size, count, n))


def build_ansatz(scenario: Scenario, grid: Optional[int] = None) -> FlowAnsatz:
    """场景度量对应的约化"""
    metric = _require_metric(scenario)
    try:
        if isinstance(metric, RadialMetric):
            return RadialAnsatz(metric.n, initial=metric, grid=grid)
        if isinstance(metric, TorusMetric):
            return TubeAnsatz(scenario.spec, initial=metric, grid=grid)
    except InvalidInputError as exc:
        raise ScenarioError(scenario.path, "metric", str(exc)) from exc
    raise ScenarioError(scenario.path, "metric", f"no flow ansatz for '{metric.label}'")


# =============================================================================
# curvature / hsc-sup
# =============================================================================

def task_curvature(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """曲率张量的对称性、闭式模型常数、Royden 型界与 Berger 恒等式"""
    spec, metric, params = scenario.spec, _require_metric(scenario), scenario.params
    atlas = build_atlas(spec, scenario.atlas)
    curv = curvature_field(metric, atlas.points)
    result = TaskResult()
    reports = result.reports
    reports.append(kahler_symmetry_check(curv, tols["SYMMETRY"]))

    estimate = estimate_from_curvature(curv, restarts=params.get("restarts"), seed=scenario.seed)
    result.tables["curvature_field"] = curvature_frame(curv, estimate)
    alpha = metric.kahler_class()
    if alpha is not None:
        volume = integrate(atlas, np.ones(curv.size), curv.G)
        expected = float(class_pairing(spec, [make_class(alpha)] * spec.n))
        gap = abs(volume - expected) / expected
        reports.append(create_report(
            "class_pairing", gap <= tols["CLASS_VOLUME_REL"],
            measured={"volume": volume}, bounds={"class_volume": expected},
            tolerance=tols["CLASS_VOLUME_REL"], slack=tols["CLASS_VOLUME_REL"] - gap,
            provenance=[f"quadrature {atlas.kind} {atlas.resolution}", "exact class arithmetic"],
            message=f"relative gap {gap:.2e}",
        ))

    if _is_flat(metric):
        chern = chern_forms(curv)
        values = {
            "R": float(np.max(np.abs(curv.R))),
            "sup_H": abs(estimate.value),
            "S": float(np.max(np.abs(curv.S))),
        }
        for key in ("c1", "c1_sq", "c2"):
            if key in chern.densities:
                values[key] = float(np.max(np.abs(chern.densities[key])))
        worst = max(values.values())
        reports.append(create_report(
            "curvature_zero", worst <= tols["ZERO"], measured=values, bounds={"zero": 0.0},
            tolerance=tols["ZERO"], slack=tols["ZERO"] - worst,
            provenance=["closed-form flat metric"], message=f"largest component {worst:.2e}",
        ))

    if isinstance(metric, RadialMetric) and metric.label == "fubini_study":
        c, n = metric.scale, metric.n
        xi = _random_directions(n, curv.size, 8, scenario.seed)
        H = np.stack([hsc(curv, xi[:, k]) for k in range(xi.shape[1])], axis=1)
        h_err = float(np.max(np.abs(H - 2.0 / c)))
        ric_err = float(np.max(np.abs(curv.ric - (n + 1) / c * curv.G)))
        worst = max(h_err, ric_err, abs(estimate.value - 2.0 / c))
        tol = tols.value(params.get("fs_tolerance", 1e-6))
        reports.append(create_report(
            "fs_constants", worst <= tol,
            measured={"H_error": h_err, "ric_error": ric_err, "sup_H": estimate.value},
            bounds={"H": 2.0 / c, "ric_factor": (n + 1) / c},
            tolerance=tol, slack=tol - worst,
            provenance=["closed-form Fubini-Study jet", "random unit directions"],
            message=f"H = 2/c within {h_err:.2e}",
        ))

    A = params.get("A", estimate.value + 1e-6)
    hat = default_metric(spec)
    if hat is not None:
        reports.append(royden_bound_check(curv, hat, A, measured_sup=estimate.value, tol=tols["ROYDEN"]))
        G_hat = hat.metric(curv.points)
        frame = simultaneous_frame(G_hat, curv.G)
        reports.append(royden_refined_check(curv, frame, A, G_hat, tol=tols["ROYDEN"]))

    if spec.n >= 2:
        for index in params.get("berger_points", [0]):
            reports.append(berger_identity_check(curv, index=int(index), tol=tols["BERGER"]))

    if spec.has_projective_factor():
        reports.append(rational_curve_bound_check(spec, metric, atlas, seed=scenario.seed))

    factors = params.get("product_bounds")
    if factors is not None and isinstance(metric, ProductMetric) and len(metric.factors) == 2:
        fx, fy = spec.factors
        reports.append(product_hsc_check(
            metric.factors[0], metric.factors[1], float(factors[0]), float(factors[1]),
            build_atlas(fx, scenario.atlas), build_atlas(fy, scenario.atlas),
            seed=scenario.seed, tol=tols["HSC_BOUND"],
        ))

    if params.get("fd_order") and hasattr(metric, "potential"):
        fd = fd_convergence_order(metric)
        minimum = float(params.get("fd_min_order", 3.5))
        reports.append(create_report(
            "fd_order", fd["order"] >= minimum, measured=fd, bounds={"min_order": minimum},
            slack=fd["order"] - minimum, provenance=["closed-form jet vs finite-difference jet"],
            message=f"observed order {fd['order']:.2f}",
        ))

    reports.append(create_report(
        "sup_rm", None, measured={"sup_rm": sup_rm_norm(curv)},
        provenance=["unitary-frame norm"], message="reported only",
    ))
    return result


def task_hsc_sup(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """sup H 的采样估计"""
    metric, params = _require_metric(scenario), scenario.params
    atlas = build_atlas(scenario.spec, scenario.atlas)
    curv = curvature_field(metric, atlas.points)
    estimate = estimate_from_curvature(curv, restarts=params.get("restarts"), seed=scenario.seed)
    result = TaskResult()
    result.tables["curvature_field"] = curvature_frame(curv, estimate)
    result.reports.append(create_report(
        "sup_hsc", None,
        measured={"sup_H": estimate.value, "argmax_point": estimate.point, "argmax_direction": estimate.direction,
                  "samples": estimate.samples, "starts": estimate.starts},
        provenance=[f"projected gradient ascent, seed {scenario.seed}"],
        message=f"sup H = {estimate.value:.10g}",
    ))
    if "expect_sup_H" in params:
        tol = tols.value(params.get("expect_tolerance", 1e-6))
        result.reports.append(expectation_report({"sup_H": estimate.value}, {"sup_H": params["expect_sup_H"]}, tol, "sampled sup H"))
    if "A" in params:
        A = float(params["A"])
        slack = A - estimate.value
        result.reports.append(create_report(
            "hsc_bound", slack >= -tols["HSC_BOUND"], measured={"sup_H": estimate.value}, bounds={"A": A},
            tolerance=tols["HSC_BOUND"], slack=slack, provenance=["sampled sup H"],
            message=f"sup H <= A = {A:g}" if slack >= 0 else f"sup H exceeds A = {A:g}",
        ))
    return result


# =============================================================================
# flow / normalized-flow
# =============================================================================

def _flow_kwargs(params: Dict) -> Dict:
    kwargs = {}
    for key in ("horizon", "snapshots", "rtol", "atol", "max_step"):
        if key in params:
            kwargs[key] = params[key]
    return kwargs


def _singular_time_report(traj: FlowTrajectory, expected: float, tol: float) -> CheckReport:
    if math.isinf(expected) or expected > traj.horizon:
        passed = not traj.singular
        return create_report(
            "singular_time", passed, measured={"T_num": traj.T_num, "singular": traj.singular},
            bounds={"class_threshold": expected}, tolerance=tol,
            provenance=["class-level threshold"],
            message="no singularity expected before the horizon" if passed else "unexpected singularity",
        )
    rel = abs(traj.T_num - expected) / expected
    return create_report(
        "singular_time", traj.singular and rel <= tol,
        measured={"T_num": traj.T_num, "trigger": traj.trigger, "relative_error": rel},
        bounds={"class_threshold": expected}, tolerance=tol, slack=tol - rel,
        provenance=["class-level threshold", f"{traj.trigger} trigger"],
        message=f"T_num = {traj.T_num:.6g} vs {expected:.6g}",
    )


def _recorded_flow(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """离线轨迹（CSV）只做速率与迹界检查"""
    params = scenario.params
    for key in ("T_num", "n"):
        if key not in params:
            raise ScenarioError(scenario.path, f"params.{key}", "required with trajectory_csv")
    traj = load_trajectory(scenario.resolve(params["trajectory_csv"]), float(params["T_num"]), int(params["n"]))
    result = TaskResult(trajectories={"recorded": traj})
    if traj.singular:
        result.reports.append(blowup_rate_check(traj, tols["BLOWUP_DELTA"]))
    if "A" in params and not traj.frame["M_t"].isna().all():
        result.reports.append(trace_bound_monitor(traj, float(params["A"]), tols["TRACE_BOUND_REL"]))
    return result


def task_flow(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """凯勒-里奇流及其存在时间、迹界、爆破速率与上同调检查"""
    params = scenario.params
    if "trajectory_csv" in params:
        return _recorded_flow(scenario, tols)
    ansatz = build_ansatz(scenario, params.get("grid"))
    traj = run_krf(ansatz, **_flow_kwargs(params))
    result = TaskResult(trajectories={"flow": traj})
    reports = result.reports
    A = float(params.get("A", traj.frame["sup_H"].iloc[0]))

    if A > 0:
        reports.append(existence_bound_check(traj, A, tols["EXISTENCE_DELTA"]))
    else:
        reports.append(skipped_report("existence", f"A = {A:.3g} <= 0: no finite existence bound"))
    reports.append(trace_bound_monitor(traj, A, tols["TRACE_BOUND_REL"]))
    reports.append(trace_evolution_check(traj, A, tols["TRACE_EVOLUTION"]))
    reports.append(cohomology_consistency(traj, tols["CLASS_VOLUME_REL"]))
    reports.append(_singular_time_report(
        traj, nef_threshold(ansatz.spec, ansatz.initial_class()), tols.value(params.get("singular_time_tolerance", 1e-2)),
    ))
    if traj.singular:
        reports.append(blowup_rate_check(traj, tols["BLOWUP_DELTA"]))
    else:
        reports.append(skipped_report("blowup_rate", "no finite-time singularity before the horizon"))

    t = traj.column("t")
    sup_rm = traj.column("sup_rm")
    measured = {"max_sup_rm": float(np.max(sup_rm))}
    if traj.singular:
        window = t <= FLOW_PARAMS["BLOWUP_WINDOW"] * traj.T_num
        measured["min_product"] = float(np.min((traj.T_num - t[window]) * sup_rm[window]))
    reports.append(create_report("sup_rm", None, measured=measured, provenance=["unitary-frame norm"], message="reported only"))
    return result


def task_normalized_flow(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """归一化流、积分恒等式与衰减"""
    params = scenario.params
    ansatz = build_ansatz(scenario, params.get("grid"))
    traj = run_normalized_krf(ansatz, **_flow_kwargs(params))
    result = TaskResult(trajectories={"normalized_flow": traj})
    reports = result.reports
    reports.append(cohomology_consistency(traj, tols["CLASS_VOLUME_REL"]))
    reports.append(_singular_time_report(
        traj, normalized_nef_threshold(ansatz.spec, ansatz.initial_class()),
        tols.value(params.get("singular_time_tolerance", 1e-2)),
    ))
    if len(traj.frame) >= 3:
        reports.extend(flow_functional_monitor(traj, nu=params.get("nu"), tol=tols["FUNCTIONAL_IDENTITY"]))
    else:
        reports.append(skipped_report("flow_identity", "fewer than three snapshots before the singular time"))
    return result


# =============================================================================
# continuity
# =============================================================================

def _closed_form_report(solution: ContinuitySolution, tol: float) -> Optional[CheckReport]:
    reference = solution.reference
    if isinstance(reference, RadialMetric) and reference.label == "fubini_study":
        ratio = solution.t - (solution.n + 1) / reference.scale
    elif isinstance(reference, TorusMetric) and not reference.modes:
        ratio = solution.t
    else:
        return None
    lo, hi = solution.eig_range
    err = max(abs(lo - ratio), abs(hi - ratio)) / abs(ratio)
    return create_report(
        "wu_yau_closed_form", err <= tol,
        measured={"eig_min": lo, "eig_max": hi, "relative_error": err, "t": solution.t},
        bounds={"ratio": ratio}, tolerance=tol, slack=tol - err,
        provenance=["Einstein reference metric"], message=f"w(t) = {ratio:.6g} w_ref within {err:.2e}",
    )


def task_continuity(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """
    Wu-Yau 方程

    params:
        t: 参数列表（从大到小延拓）
        trace_estimates: [{"mu", "eps"}]
        family: [{"case": 1, "eps"} | {"case": 2, "mu"}]
    """
    reference, params = _require_metric(scenario), scenario.params
    grid = params.get("grid")
    result = TaskResult()
    reports = result.reports
    ts = params.get("t", [])
    if ts:
        for solution in wu_yau_continuation(reference, ts, grid=grid):
            result.solutions.append(solution)
            reports.append(solution_check(solution, tols["WY_RESIDUAL_REL"]))
            closed = _closed_form_report(solution, tols["WY_RESIDUAL_REL"])
            if closed is not None:
                reports.append(closed)

    for item in params.get("trace_estimates", []):
        mu, eps = float(item["mu"]), float(item["eps"])
        t = reference.n * mu + 2 * reference.n * eps
        try:
            solution = wu_yau_solve(reference, t, grid=grid)
        except GeometryLabError as exc:
            reports.append(error_report("trace_estimate", str(exc), measured={"t": t}))
            continue
        result.solutions.append(solution)
        reports.append(trace_estimate_check(solution, mu, eps, tols["WY_CERTIFICATE"]))

    for item in params.get("family", []):
        solution, report = my_family_construct(
            reference, eps=item.get("eps"), case=int(item.get("case", 1)), mu=item.get("mu"), grid=grid,
            tol=tols["WY_RESIDUAL_REL"],
        )
        if item.get("expect_inapplicable"):
            report = create_report(
                report.name, solution is None, measured=report.measured, bounds=report.bounds,
                provenance=report.provenance, message=f"expected inapplicable: {report.message}",
            )
        if solution is not None:
            result.solutions.append(solution)
        reports.append(report)
    return result


# =============================================================================
# chern / my-audit / mu-bounds / expansion
# =============================================================================

def task_chern(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """陈形式积分、类运算比较与 Chern-Weil 审计"""
    spec, params = scenario.spec, scenario.params
    result = TaskResult()
    reports = result.reports
    if scenario.metric is None:
        if spec.n >= 2:
            reports.append(my_defect_check(spec, tol=tols["CW_SLACK"]))
        return result
    metric = scenario.metric
    atlas = build_atlas(spec, scenario.atlas)
    curv = curvature_field(metric, atlas.points)
    chern = chern_forms(curv, atlas)
    alpha = make_class(metric.kahler_class())
    reports.append(chern_numbers_check(spec, chern, alpha, tols["CHERN_NUMBER"]))
    if spec.n >= 2:
        reports.append(my_defect_check(spec, chern, tols["CW_SLACK"]))
        reports.append(cw_inequality_audit(spec, metric, curv, atlas, tols["CW_SLACK"]))
    if "expect" in params:
        measured = dict(chern.numbers)
        if spec.n == 2 and "c2" in measured:
            measured["defect"] = 3.0 * measured["c2"] - measured["c1_sq"]
        reports.append(expectation_report(measured, params["expect"], tols.value(params.get("expect_tolerance", 1e-2)), "Chern-Weil quadrature"))
    return result


def _weighted_report(spec: ManifoldSpec, nu: int, alpha, tol: float) -> CheckReport:
    value = my_defect_weighted(spec, None, nu, alpha)
    hypotheses = is_nef(spec, canonical_class(spec))
    return create_report(
        "my_weighted", bool(float(value) >= -tol) if hypotheses else None,
        measured={"defect": value, "nu": nu}, bounds={"lower": 0}, tolerance=tol, slack=float(value),
        provenance=["exact class arithmetic"],
        message="K_X nef: inequality asserted" if hypotheses else "K_X not nef: value only",
    )


def task_my_audit(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """Miyaoka-Yau 型亏量（类数据）、加权亏量、性质 (A) 序列与度量审计"""
    spec, params = scenario.spec, scenario.params
    result = TaskResult()
    reports = result.reports
    if spec.n >= 2:
        reports.append(my_defect_check(spec, tol=tols["CW_SLACK"]))
    if "nu" in params:
        alpha = scenario.kahler_class()
        if alpha is None:
            raise ScenarioError(scenario.path, "params.class", "weighted defect needs a class")
        reports.append(_weighted_report(spec, int(params["nu"]), alpha, tols["CW_SLACK"]))
    if "sequence" in params:
        sequence = [(make_class(item["class"]), float(item["mu"])) for item in params["sequence"]]
        reports.append(property_A_limit_check(spec, sequence, tols["PROPERTY_A_TAIL"]))
    if scenario.metric is not None and spec.n >= 2:
        atlas = build_atlas(spec, scenario.atlas)
        curv = curvature_field(scenario.metric, atlas.points)
        audit = cw_inequality_audit(spec, scenario.metric, curv, atlas, tols["CW_SLACK"])
        reports.append(audit)
        if "expect_slack" in params:
            reports.append(expectation_report(
                {"slack": audit.slack}, {"slack": params["expect_slack"]},
                tols.value(params.get("expect_tolerance", 1e-4)) * max(1.0, abs(params["expect_slack"])),
                "Chern-Weil audit",
            ))
    if "expect_defect" in params and spec.n >= 2:
        value = float(reports[0].measured["defect"])
        reports.append(expectation_report({"defect": value}, {"defect": params["expect_defect"]}, 1e-9, "exact class arithmetic"))
    return result


def task_mu_bounds(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """mu 的上下界夹逼与 nef 阈值交叉检查"""
    spec, params = scenario.spec, scenario.params
    alpha = scenario.kahler_class()
    if alpha is None:
        raise ScenarioError(scenario.path, "params.class", "mu bounds need a Kaehler class")
    n = spec.n
    lower = mu_lower_bound(spec, alpha)
    atlas = build_atlas(spec, scenario.atlas) if scenario.atlas else None
    upper = mu_upper_search(
        spec, alpha, atlas=atlas, budget=params.get("budget"), restarts=params.get("restarts"), seed=scenario.seed,
    )
    result = TaskResult()
    reports = result.reports
    reports.append(create_report(
        "mu_lower", None, measured={"mu_lower": lower}, provenance=["Berger constant", "exact class arithmetic"],
        message="no information below 0" if lower <= 0 else f"mu >= {lower:.10g}",
    ))
    reports.append(create_report(
        "mu_upper", upper.value >= max(lower, 0.0) - tols["MU_SANDWICH"],
        measured={"mu_upper": upper.value, "evaluations": upper.evaluations, "converged": upper.converged},
        bounds={"mu_lower": lower}, tolerance=tols["MU_SANDWICH"], slack=upper.value - max(lower, 0.0),
        provenance=["Nelder-Mead over the metric family"], message="upper bound only, attainment not claimed",
    ))
    reports.append(mu_sandwich_check(max(lower, 0.0), upper, tols["MU_SANDWICH"]))

    threshold = nef_threshold(spec, alpha)
    if upper.value > 0:
        bound = 1.0 / (n * upper.value)
        slack = threshold - bound
        reports.append(create_report(
            "nef_threshold", slack >= -tols["MU_SANDWICH"],
            measured={"lambda": threshold}, bounds={"one_over_n_mu": bound},
            tolerance=tols["MU_SANDWICH"], slack=slack, provenance=["exact class arithmetic", "mu upper estimate"],
            message=f"lambda = {threshold:.6g} >= {bound:.6g}",
        ))
    else:
        reports.append(skipped_report("nef_threshold", "mu estimate <= 0: bound is vacuous"))
    if "expect" in params:
        measured = {"mu_lower": lower, "mu_upper": upper.value, "lambda": threshold}
        reports.append(expectation_report(measured, params["expect"], tols["MU_SANDWICH"], "class arithmetic and search"))
    return result


def task_expansion(scenario: Scenario, tols: Tolerances) -> TaskResult:
    """亏量/体积的精确渐近展开"""
    spec, params = scenario.spec, scenario.params
    alpha = scenario.kahler_class()
    if alpha is None or "nu" not in params:
        raise ScenarioError(scenario.path, "params", "expansion needs 'class' and 'nu'")
    nu = int(params["nu"])
    variants = params.get("variants", list(EXPANSION_VARIANTS))
    schedule = params.get("schedule", [0.1, 0.05, 0.025, 0.0125])
    result = TaskResult()
    for variant in variants:
        if variant not in EXPANSION_VARIANTS:
            raise ScenarioError(scenario.path, "params.variants", f"unknown variant '{variant}'")
        result.reports.append(asymptotic_expansion_check(spec, alpha, nu, schedule, variant))
    if "times" in params:
        result.reports.append(class_decay_check(spec, alpha, nu, params["times"]))
    if "expect_limit" in params:
        report = result.reports[0]
        limit = float(report.bounds["defect_limit"])
        result.reports.append(expectation_report(
            {"defect_limit": limit}, {"defect_limit": params["expect_limit"]},
            tols.value(params.get("expect_tolerance", 1e-9)), "exact class arithmetic",
        ))
    return result


TASK_RUNNERS: Dict[str, Callable[[Scenario, Tolerances], TaskResult]] = {
    "curvature": task_curvature,
    "hsc-sup": task_hsc_sup,
    "flow": task_flow,
    "normalized-flow": task_normalized_flow,
    "continuity": task_continuity,
    "chern": task_chern,
    "my-audit": task_my_audit,
    "mu-bounds": task_mu_bounds,
    "expansion": task_expansion,
}


def run_task(scenario: Scenario, tolerance_scale: float = 1.0) -> TaskResult:
    """
    执行场景中的任务

    模块抛出的 GeometryLabError（场景错误除外）转为 ERROR 报告，使其它检查照常汇总。
    params 中缺失或类型不符的值（KeyError、TypeError、ValueError）按场景错误处理。

    Raises:
        ScenarioError: 场景内容与任务不符
    """
    runner = TASK_RUNNERS.get(scenario.task)
    if runner is None:
        raise ScenarioError(scenario.path, "task", f"unknown task '{scenario.task}'")
    tols = Tolerances(tolerance_scale)
    try:
        return runner(scenario, tols)
    except ScenarioError:
        raise
    except GeometryLabError as exc:
        logger.warning("%s: %s failed: %s", scenario.name, scenario.task, exc)
        return TaskResult(reports=[error_report(scenario.task, f"{type(exc).__name__}: {exc}")])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(scenario.path, "params", f"bad parameter: {type(exc).__name__}: {exc}") from exc
