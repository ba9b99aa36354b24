"""
度量族构造 - 由连续性方程的解得到 Ric + w = c w_ref 的度量及其证书
"""

import logging
from typing import Optional, Tuple

import numpy as np

from config import TOLERANCES
from errors import InfeasibleError, InvalidInputError
from continuity.wu_yau import ContinuitySolution, wu_yau_solve
from geometry.metrics import MetricField
from components.reports import CheckReport, create_report, error_report

logger = logging.getLogger(__name__)

# 情形 -> (t 关于 n 与参数的系数, 积分界的系数)
FAMILY_CASES = {
    1: {"t_factor": 2, "bound_factor": 4, "anchor": "family_case1"},
    2: {"t_factor": 3, "bound_factor": 9, "anchor": "family_case2"},
}


def my_family_construct(
    reference: MetricField,
    eps: Optional[float] = None,
    case: int = 1,
    mu: Optional[float] = None,
    grid: Optional[int] = None,
    tol: Optional[float] = None,
) -> Tuple[Optional[ContinuitySolution], CheckReport]:
    """
    构造 w~ 并给出证书

    情形 1：t = 2n eps，Ric(w~) + w~ = 2n eps w_ref，sup H(w_ref) <= eps 时
        int |Ric + w~|^2 w~^n <= 4n^3 int w~^n
    情形 2：(mu, eps) = (mu, mu)，t = 3n mu，界为 9n^3 int w~^n（要求 sup H(w_ref) <= mu）

    Args:
        reference: 参考度量
        eps: 情形 1 的参数
        case: 1 或 2
        mu: 情形 2 的参数（mu > 0）
        grid: 网格大小

    Returns:
        (解，证书)；t 处类不是凯勒类时解为 None，证书为 ERROR
    """
    if tol is None:
        tol = TOLERANCES["WY_RESIDUAL_REL"]
    if case not in FAMILY_CASES:
        raise InvalidInputError(f"unknown family case {case}")
    rule = FAMILY_CASES[case]
    name = rule["anchor"]
    if case == 1:
        if eps is None or not eps > 0:
            raise InvalidInputError("case 1 needs eps > 0")
        param = float(eps)
    else:
        if mu is None or not mu > 0:
            raise InvalidInputError("case 2 needs mu > 0")
        param = float(mu)
    n = reference.n
    t = rule["t_factor"] * n * param

    try:
        solution = wu_yau_solve(reference, t, grid=grid)
    except InfeasibleError as exc:
        logger.info("case %d inapplicable at t=%g: %s", case, t, exc)
        return None, error_report(name, f"case {case} inapplicable: {exc}", measured={"t": t})

    volume = solution.volume
    integral = solution.ric_plus_omega_sq_int
    bound = rule["bound_factor"] * n ** 3 * volume
    expected = solution.expected_class.as_float()
    class_gap = float(np.max(np.abs(solution.class_coeff - expected) / np.maximum(np.abs(expected), 1.0)))
    applies = solution.ref_sup_h <= param + TOLERANCES["HSC_BOUND"]
    certified = solution.residual <= tol and class_gap <= TOLERANCES["CLASS_VOLUME_REL"]
    if applies:
        passed = certified and integral <= bound * (1.0 + TOLERANCES["WY_CERTIFICATE"])
        message = f"int|Ric+w|^2 = {integral:.6g} <= {bound:.6g}"
    else:
        passed = certified
        message = f"sup H(w_ref) = {solution.ref_sup_h:.6g} > {param:g}: integral bound not asserted"
    report = create_report(
        name,
        passed,
        measured={
            "t": t,
            "residual": solution.residual,
            "class": solution.class_coeff,
            "class_gap": class_gap,
            "ric_plus_omega_sq_int": integral,
            "volume": volume,
            "ref_sup_h": solution.ref_sup_h,
            "bound_applies": applies,
        },
        bounds={"class": expected, "integral": bound, "residual": tol},
        tolerance=tol,
        slack=(bound - integral) / bound if applies else tol - solution.residual,
        provenance=[f"{solution.kind} Newton solve", "exact class arithmetic"],
        message=message,
    )
    return solution, report
