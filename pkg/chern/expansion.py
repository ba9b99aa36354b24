"""
渐近展开 - 亏量与体积沿 eps -> 0（或 t -> inf）的精确类运算极限
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
import sympy

from errors import InvalidInputError
from chern.defects import defect_form
from chern.forms import class_chern_data
from manifolds.classes import (
    KahlerClassVector, canonical_class, class_pairing, is_nef, make_class, pair_quadratic,
)
from manifolds.spec import ManifoldSpec
from components.reports import CheckReport, create_report

logger = logging.getLogger(__name__)

EPS = sympy.Symbol("eps", positive=True)

# 变体 -> (类 2 pi K + eps beta 中 beta 的构造说明)
EXPANSION_VARIANTS = ("continuity", "case2", "normalized_flow")


def _direction(spec: ManifoldSpec, alpha: KahlerClassVector, variant: str) -> KahlerClassVector:
    n = spec.n
    if variant == "continuity":
        return alpha * (2 * n)
    if variant == "case2":
        return alpha * (3 * n)
    if variant == "normalized_flow":
        # [omega(t)] = 2 pi K + e^-t (alpha - 2 pi K)
        return alpha - canonical_class(spec, exact=True) * (2 * sympy.pi)
    raise InvalidInputError(f"unknown expansion variant '{variant}'")


def _check_regime(spec: ManifoldSpec, nu: int):
    n = spec.n
    if n < 3 or nu < 0 or nu >= n - 2:
        raise InvalidInputError(f"expansion needs n >= 3 and 0 <= nu < n-2 (n={n}, nu={nu})")


def expansion_polynomials(spec: ManifoldSpec, alpha: KahlerClassVector, nu: int, variant: str = "continuity"):
    """
    精确多项式（关于 eps）

    defect(eps) = eps^-(n-nu-2) D . (2 pi K + eps beta)^(n-2)
    volume(eps) = eps^-(n-nu-2) (2 pi K + eps beta)^n / eps^2

    Returns:
        (defect(eps), volume(eps), defect 极限, volume 极限, beta)
    """
    _check_regime(spec, nu)
    n = spec.n
    alpha = make_class(alpha.coeffs, exact=True)
    K = canonical_class(spec, exact=True)
    beta = _direction(spec, alpha, variant)
    flow = K * (2 * sympy.pi) + beta * EPS
    D = defect_form(n, class_chern_data(spec, exact=True))
    power = n - nu - 2

    defect = sympy.expand(pair_quadratic(spec, D, [flow] * (n - 2)) / EPS ** power)
    volume = sympy.expand(class_pairing(spec, [flow] * n) / EPS ** (power + 2))

    two_pi = 2 * sympy.pi
    defect_limit = sympy.binomial(n - 2, nu) * two_pi ** nu * pair_quadratic(spec, D, [K] * nu + [beta] * (n - nu - 2))
    volume_limit = sympy.binomial(n, nu) * two_pi ** nu * class_pairing(spec, [K] * nu + [beta] * (n - nu))
    return defect, volume, sympy.simplify(defect_limit), sympy.simplify(volume_limit), beta


def _rate(values: np.ndarray, limit: float, schedule: np.ndarray) -> Optional[float]:
    """相邻两点误差的对数斜率（误差为 0 时返回 None）"""
    errors = np.abs(values - limit)
    if len(errors) < 2 or errors[-1] == 0.0 or errors[-2] == 0.0:
        return None
    return float(math.log(errors[-2] / errors[-1]) / math.log(schedule[-2] / schedule[-1]))


def asymptotic_expansion_check(
    spec: ManifoldSpec,
    alpha: KahlerClassVector,
    nu: int,
    schedule: Sequence[float],
    variant: str = "continuity",
) -> CheckReport:
    """
    沿参数序列验证亏量的二项式极限与体积侧的 eps^2 衰减

    极限由符号极限与二项式公式分别得到，要求二者精确相等。

    Args:
        spec: 模型流形（n >= 3）
        alpha: nef 类
        nu: 数值小平维数
        schedule: eps（或 continuity/case2 中的 mu）序列；normalized_flow 时为 s = e^-t
        variant: "continuity" | "case2" | "normalized_flow"

    Raises:
        InvalidInputError: 参数区间不符
    """
    if not is_nef(spec, alpha):
        raise InvalidInputError(f"class {alpha.as_float().tolist()} is not nef")
    defect, volume, defect_limit, volume_limit, beta = expansion_polynomials(spec, alpha, nu, variant)

    symbolic_defect = sympy.simplify(sympy.limit(defect, EPS, 0))
    symbolic_volume = sympy.simplify(sympy.limit(volume, EPS, 0))
    exact_match = (
        sympy.simplify(symbolic_defect - defect_limit) == 0
        and sympy.simplify(symbolic_volume - volume_limit) == 0
    )

    schedule = np.asarray(sorted(schedule, reverse=True), dtype=float)
    defect_values = np.array([float(defect.subs(EPS, e)) for e in schedule])
    volume_values = np.array([float(volume.subs(EPS, e)) for e in schedule])
    dl, vl = float(defect_limit), float(volume_limit)
    defect_err = np.abs(defect_values - dl)
    converging = bool(len(defect_err) < 2 or np.all(np.diff(defect_err) <= 1e-12 * max(1.0, abs(dl))))

    logger.debug("expansion %s: defect(eps) = %s, limit %s", variant, defect, defect_limit)
    return create_report(
        "expansion",
        exact_match and converging,
        measured={
            "variant": variant,
            "schedule": schedule,
            "defect_values": defect_values,
            "volume_over_eps_sq": volume_values,
            "defect_rate": _rate(defect_values, dl, schedule),
            "volume_rate": _rate(volume_values, vl, schedule),
            "defect_polynomial": str(defect),
        },
        bounds={"defect_limit": defect_limit, "volume_limit": volume_limit, "beta": list(beta.coeffs)},
        tolerance=0.0,
        slack=float(-np.max(defect_err)) if len(defect_err) else 0.0,
        provenance=["exact sympy class arithmetic", "binomial expansion of the class power"],
        message="symbolic limit equals the binomial formula" if exact_match else "symbolic limit differs from the binomial formula",
    )


def class_decay_check(
    spec: ManifoldSpec,
    alpha: KahlerClassVector,
    nu: int,
    times: Sequence[float],
) -> CheckReport:
    """
    归一化流类层面的衰减指数

    L(t) = n e^((n-nu-2)t) (2 pi c1) . [omega(t)]^(n-1) 至少按 e^-2t 衰减，
    [omega(t)]^n 按 e^-(n-nu) t 衰减。以 s = e^-t 展开后读出最低次数。
    """
    n = spec.n
    K = canonical_class(spec, exact=True)
    if not is_nef(spec, K):
        raise InvalidInputError(f"K_X is not nef on {spec.describe()}")
    s = EPS
    alpha = make_class(alpha.coeffs, exact=True)
    flow = K * (2 * sympy.pi) + (alpha - K * (2 * sympy.pi)) * s
    c1 = -K
    functional = sympy.expand(n * class_pairing(spec, [c1 * (2 * sympy.pi)] + [flow] * (n - 1)) * s ** (-(n - nu - 2)))
    volume = sympy.expand(class_pairing(spec, [flow] * n))

    def lowest_power(expr) -> Optional[int]:
        expr = sympy.expand(expr)
        if expr == 0:
            return None
        terms = sympy.Poly(sympy.expand(expr * s ** (n + 2)), s).monoms()
        return min(m[0] for m in terms) - (n + 2)

    decay = lowest_power(functional)
    volume_decay = lowest_power(volume)
    values = [float(functional.subs(s, math.exp(-t))) for t in times]
    passed = (decay is None or decay >= 2) and (volume_decay is None or volume_decay == n - nu)
    return create_report(
        "class_decay",
        passed,
        measured={"functional_exponent": decay, "volume_exponent": volume_decay,
                  "times": list(times), "functional_values": values},
        bounds={"functional_exponent_min": 2, "volume_exponent": n - nu},
        tolerance=0.0,
        slack=None if decay is None else float(decay - 2),
        provenance=["exact sympy class arithmetic in s = e^-t"],
        message=f"L(t) ~ e^(-{decay} t)" if decay is not None else "L(t) vanishes identically",
    )
