"""
Miyaoka-Yau 型亏量 - 类运算的配对值与 Chern-Weil 不等式审计
"""

import logging
import math
from typing import Optional

import numpy as np
import sympy

from config import TOLERANCES
from errors import InvalidInputError
from chern.forms import ChernData, class_chern_data, form_norm_sq
from geometry.curvature import CurvatureField
from geometry.metrics import MetricField
from manifolds.classes import (
    KahlerClassVector, canonical_class, is_nef, make_class, pair_quadratic,
)
from manifolds.quadrature import QuadratureAtlas, integrate
from manifolds.spec import ManifoldSpec
from components.reports import CheckReport, create_report, error_report

logger = logging.getLogger(__name__)

# |eta|^2 = g^{jbar i} g^{lbar k} eta_{i lbar} conj(eta_{k jbar})，因而 |omega|^2 = n
NORM_CONVENTION = "|eta|^2 = g^{ji} g^{lk} eta_{il} conj(eta_{kj}), |omega|^2 = n"


def defect_form(n: int, chern: ChernData) -> np.ndarray:
    """
    亏量 2(n+1)/n c2 - c1^2 的二次型表示
    """
    if chern.source != "classes":
        raise InvalidInputError("defect form needs class-level Chern data")
    c1 = chern.c1
    exact = c1.dtype == object
    ratio = sympy.Rational(2 * (n + 1), n) if exact else 2.0 * (n + 1) / n
    return ratio * chern.c2 - np.outer(c1, c1)


def my_defect_MY1(spec: ManifoldSpec, chern: Optional[ChernData] = None):
    """
    (2(n+1)/n c2 - c1^2) . (-c1)^(n-2)

    Args:
        spec: 模型流形（n >= 2）
        chern: 陈数据；"forms" 且 n = 2 时直接使用积分值，否则使用类数据

    Returns:
        配对值（类数据为精确值时返回 sympy 数）
    """
    n = spec.n
    if n < 2:
        raise InvalidInputError("Miyaoka-Yau defect needs n >= 2")
    if chern is not None and chern.source == "forms":
        if n == 2 and "c2" in chern.numbers:
            return 3.0 * chern.numbers["c2"] - chern.numbers["c1_sq"]
        chern = None
    if chern is None:
        chern = class_chern_data(spec)
    exact = chern.c1.dtype == object
    K = canonical_class(spec, exact=exact)
    return pair_quadratic(spec, defect_form(n, chern), [K] * (n - 2))


def my_defect_check(spec: ManifoldSpec, chern: Optional[ChernData] = None, tol: Optional[float] = None) -> CheckReport:
    """
    MY1 配对值；只有 K_X 在模型锥中为 nef 时才断言非负
    """
    if tol is None:
        tol = TOLERANCES["CW_SLACK"]
    value = my_defect_MY1(spec, chern)
    hypotheses = is_nef(spec, canonical_class(spec))
    source = chern.source if chern is not None else "classes"
    return create_report(
        "my_defect",
        bool(float(value) >= -tol) if hypotheses else None,
        measured={"defect": value, "source": source},
        bounds={"lower": 0},
        tolerance=tol,
        slack=float(value),
        provenance=[f"{source} Chern data", "exact class arithmetic"],
        message="K_X nef: inequality asserted" if hypotheses else "K_X not nef: value only",
        anchor_key="my_defect",
    )


def my_defect_weighted(
    spec: ManifoldSpec,
    chern: Optional[ChernData],
    nu: int,
    alpha: KahlerClassVector,
):
    """
    (2(n+1)/n c2 - c1^2) . (-c1)^nu . alpha^(n-nu-2)

    Raises:
        InvalidInputError: n < 3、nu >= n-2 或 alpha 不是 nef
    """
    n = spec.n
    if n < 3 or nu < 0 or nu >= n - 2:
        raise InvalidInputError(f"weighted defect needs n >= 3 and 0 <= nu < n-2 (n={n}, nu={nu})")
    if not is_nef(spec, alpha):
        raise InvalidInputError(f"class {alpha.as_float().tolist()} is not nef")
    if chern is None or chern.source != "classes":
        chern = class_chern_data(spec, exact=alpha.exact)
    exact = chern.c1.dtype == object and alpha.exact
    if not exact:
        chern = class_chern_data(spec, exact=False)
        alpha = KahlerClassVector(alpha.as_float())
    K = canonical_class(spec, exact=exact)
    return pair_quadratic(spec, defect_form(n, chern), [K] * nu + [alpha] * (n - nu - 2))


def ric_plus_omega_sq(curv: CurvatureField) -> np.ndarray:
    """|Ric + omega|^2 逐点值"""
    return form_norm_sq(curv, curv.ric + curv.G)


def cw_inequality_audit(
    spec: ManifoldSpec,
    metric: MetricField,
    curv: CurvatureField,
    atlas: QuadratureAtlas,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    Chern-Weil 不等式审计

    lhs = (2(n+1)/n c2 - c1^2) . [omega]^(n-2)（类运算）
    rhs = -(n+2)/(4 pi^2 n^2 (n-1)) int |Ric + omega|^2 omega^n（求积）
    """
    if tol is None:
        tol = TOLERANCES["CW_SLACK"]
    n = spec.n
    if n < 2:
        raise InvalidInputError("Chern-Weil audit needs n >= 2")
    alpha = metric.kahler_class()
    if alpha is None:
        return error_report("cw_audit", f"{metric.label} has no known Kaehler class")
    chern = class_chern_data(spec, exact=False)
    lhs = float(pair_quadratic(spec, defect_form(n, chern), [make_class(alpha)] * (n - 2)))
    integral = integrate(atlas, ric_plus_omega_sq(curv), curv.G)
    rhs = -(n + 2) / (4.0 * math.pi ** 2 * n ** 2 * (n - 1)) * integral
    slack = lhs - rhs
    return create_report(
        "cw_audit",
        slack >= -tol,
        measured={"lhs": lhs, "ric_plus_omega_sq_int": integral, "volume": integrate(atlas, np.ones(curv.size), curv.G)},
        bounds={"rhs": rhs},
        tolerance=tol,
        slack=slack,
        provenance=["exact class arithmetic", f"quadrature {atlas.kind} {atlas.resolution}", NORM_CONVENTION],
        message=f"slack {slack:.6g}",
    )
