"""
mu_alpha 估计 - 上同调下界与参数化度量族上的 sup H 极小化
"""

import logging
import math
from typing import Callable, List, Optional
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from config import MU_SEARCH, QUADRATURE, TOLERANCES
from errors import DegenerateMetricError, InvalidInputError
from geometry.hsc_search import sup_hsc
from geometry.metrics import FourierMode, MetricField, ProductMetric, RadialMetric, TorusMetric, dual_wave
from manifolds.classes import KahlerClassVector, class_pairing, first_chern_class, is_kahler
from manifolds.quadrature import QuadratureAtlas, build_atlas
from manifolds.spec import ManifoldSpec, factor_offsets
from components.reports import CheckReport, create_report

logger = logging.getLogger(__name__)


def berger_constant(n: int) -> float:
    """C_n = 2 (n-1)! / ((n+1) pi^(n-1))"""
    return 2.0 * math.factorial(n - 1) / ((n + 1) * math.pi ** (n - 1))


def mu_lower_bound(spec: ManifoldSpec, alpha: KahlerClassVector) -> float:
    """
    mu_alpha >= C_n 2pi (c1 . alpha^(n-1)) / alpha^n

    结果可能 <= 0，此时相对 mu >= 0 无信息。
    """
    if not is_kahler(spec, alpha):
        raise InvalidInputError(f"class {alpha.as_float().tolist()} is not Kaehler")
    n = spec.n
    a = KahlerClassVector(alpha.as_float())
    c1 = KahlerClassVector(first_chern_class(spec).coeffs)
    numerator = class_pairing(spec, [c1] + [a] * (n - 1))
    volume = class_pairing(spec, [a] * n)
    return float(berger_constant(n) * 2.0 * math.pi * numerator / volume)


@dataclass
class MetricFamily:
    """类 alpha 中的参数化度量族 params -> MetricField，params = 0 为基准成员"""
    build: Callable[[np.ndarray], MetricField]
    dimension: int
    label: str


@dataclass
class MuSearchResult:
    """mu 上界搜索结果（只给出见证参数，不声称取到下确界）"""
    value: float
    params: np.ndarray
    converged: bool
    evaluations: int
    history: List[float] = field(default_factory=list)


def _leaf_family(leaf: ManifoldSpec, coeffs: np.ndarray, modes: int):
    if leaf.kind == "torus":
        waves = []
        for k in range(leaf.n):
            for m in range(1, modes + 1):
                integers = np.zeros(2 * leaf.n, dtype=int)
                integers[2 * k] = m
                waves.append(dual_wave(leaf, integers))

        def build(p):
            return TorusMetric(leaf, areas=coeffs, modes=[FourierMode(w, a) for w, a in zip(waves, p)])
        return build, len(waves)
    if leaf.kind == "projective":
        scale = float(coeffs[0]) / (2.0 * math.pi)

        def build(p):
            return RadialMetric(leaf.n, scale=scale, perturbation=list(p))
        return build, modes
    raise InvalidInputError(f"factor {leaf.describe()} has class data only; no metric family")


def metric_family(spec: ManifoldSpec, alpha: KahlerClassVector, modes: int = 2) -> MetricFamily:
    """
    类 alpha 中保持类不变的势函数扰动族

    环面因子：沿各坐标方向的傅里叶模式振幅；射影因子：径向多项式 P(mu) 的系数。
    """
    if not is_kahler(spec, alpha):
        raise InvalidInputError(f"class {alpha.as_float().tolist()} is not Kaehler")
    a = alpha.as_float()
    parts = []
    for leaf, b_off, _ in factor_offsets(spec):
        parts.append(_leaf_family(leaf, a[b_off:b_off + leaf.h11], modes))
    sizes = [size for _, size in parts]
    cuts = np.cumsum([0] + sizes)

    def build(params: np.ndarray) -> MetricField:
        params = np.asarray(params, dtype=float)
        members = [b(params[cuts[i]:cuts[i + 1]]) for i, (b, _) in enumerate(parts)]
        return members[0] if len(members) == 1 else ProductMetric(members)

    return MetricFamily(build=build, dimension=int(cuts[-1]), label=f"perturbations of {spec.describe()}")


def mu_upper_search(
    spec: ManifoldSpec,
    alpha: KahlerClassVector,
    family: Optional[MetricFamily] = None,
    atlas: Optional[QuadratureAtlas] = None,
    budget: Optional[int] = None,
    restarts: Optional[int] = None,
    seed: int = 0,
    hsc_restarts: Optional[int] = None,
) -> MuSearchResult:
    """
    在度量族上用 Nelder-Mead（带随机重启）极小化 sup H，结果是 mu_alpha 的上界

    先评估基准成员，再从原点和随机起点各做一次单纯形搜索；退化度量视为 +inf。

    Args:
        spec: 模型流形
        alpha: 凯勒类
        family: 参数化度量族，默认 metric_family(spec, alpha)
        atlas: 样本点，默认 build_atlas(spec)
        budget: 总函数评估预算
        restarts: 原点之外的随机起点数
        seed: 随机种子

    Returns:
        MuSearchResult；预算耗尽时 converged = False
    """
    if budget is None:
        budget = MU_SEARCH["BUDGET"]
    if restarts is None:
        restarts = MU_SEARCH["RESTARTS"]
    if family is None:
        family = metric_family(spec, alpha)
    if atlas is None:
        atlas = build_atlas(spec, {"projective_nodes": QUADRATURE["PROJECTIVE_NODES"]})

    history: List[float] = []

    def objective(params: np.ndarray) -> float:
        try:
            value = sup_hsc(family.build(params), atlas, restarts=hsc_restarts, seed=seed).value
        except DegenerateMetricError:
            value = math.inf
        history.append(value)
        return value

    base = np.zeros(family.dimension)
    best_params = base
    best_value = objective(base)
    converged = True
    if family.dimension == 0:
        return MuSearchResult(best_value, base, True, len(history), history)

    rng = np.random.default_rng(seed)
    starts = [base] + [rng.uniform(-MU_SEARCH["BOX"], MU_SEARCH["BOX"], family.dimension) for _ in range(restarts)]
    per_run = max(1, (budget - 1) // len(starts))
    for x0 in starts:
        result = optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={"maxfev": per_run, "xatol": MU_SEARCH["XATOL"], "fatol": MU_SEARCH["FATOL"]},
        )
        logger.debug("Nelder-Mead from %s: %.8g (%s)", np.round(x0, 4), result.fun, result.message)
        converged = converged and bool(result.success)
        if result.fun < best_value:
            best_value, best_params = float(result.fun), np.asarray(result.x)
    return MuSearchResult(
        value=float(best_value),
        params=best_params,
        converged=converged,
        evaluations=len(history),
        history=history,
    )


def mu_sandwich_check(
    lower: float,
    upper: MuSearchResult,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    上下界夹逼：lower <= upper + tol；两者之差不超过 tol 时给出 mu 的数值认证
    """
    if tol is None:
        tol = TOLERANCES["MU_SANDWICH"]
    gap = upper.value - lower
    certified = abs(gap) <= tol
    return create_report(
        "mu_sandwich",
        gap >= -tol,
        measured={"mu_lower": lower, "mu_upper": upper.value, "witness": upper.params,
                  "search_converged": upper.converged, "certified": certified},
        bounds={"gap": gap},
        tolerance=tol,
        slack=gap + tol,
        provenance=["class arithmetic lower bound", "sup H of family members"],
        message=(f"mu = {lower:.6g} +/- {tol:g}" if certified else f"mu in [{max(lower, 0.0):.6g}, {upper.value:.6g}]"),
    )
