"""
陈形式 - 由曲率逐点组装 c1、c1^2、c2 密度（相对 omega^n），以及类层面的陈数据
"""

import logging
import math
from typing import Dict, Optional
from dataclasses import dataclass, field

import numpy as np

from config import TOLERANCES
from errors import InvalidInputError
from geometry.curvature import CurvatureField, frame_tensor
from manifolds.classes import KahlerClassVector, class_pairing, make_class, pair_quadratic
from manifolds.quadrature import QuadratureAtlas, integrate
from manifolds.spec import ManifoldSpec, c1_vector, c2_form
from components.reports import CheckReport, create_report

logger = logging.getLogger(__name__)


@dataclass
class ChernData:
    """
    陈数据

    source = "forms"：densities 为逐点密度 f，使 int f omega^n 等于
        c1 (n = 1)，c1^2 . [omega]^(n-2) 与 c2 . [omega]^(n-2) (n >= 2)；
        numbers 为求积后的值。
    source = "classes"：c1 为 H^{1,1} 基上的系数，c2 为二次型。
    """
    source: str
    n: int
    c1: Optional[np.ndarray] = None
    c2: Optional[np.ndarray] = None
    densities: Dict[str, np.ndarray] = field(default_factory=dict)
    numbers: Dict[str, float] = field(default_factory=dict)


def ricci_norm_sq(curv: CurvatureField) -> np.ndarray:
    """|Ric|^2 = tr(g^-1 Ric g^-1 Ric)"""
    M = np.einsum("nij,njk->nik", curv.Ginv, curv.ric)
    return np.einsum("nij,nji->n", M, M).real


def form_norm_sq(curv: CurvatureField, form: np.ndarray) -> np.ndarray:
    """(1,1) 形式的范数 |eta|^2 = g^{jbar i} g^{lbar k} eta_{i lbar} conj(eta_{k jbar})，|omega|^2 = n"""
    M = np.einsum("nij,njk->nik", curv.Ginv, form)
    return np.einsum("nij,nji->n", M, M).real


def curvature_norm_sq(curv: CurvatureField) -> np.ndarray:
    """|Rm|^2：酉标架下分量模平方和"""
    return np.sum(np.abs(frame_tensor(curv)) ** 2, axis=(1, 2, 3, 4))


def chern_forms(curv: CurvatureField, atlas: Optional[QuadratureAtlas] = None) -> ChernData:
    """
    由曲率组装陈形式密度

    c1 = Ric/(2 pi)；c2 = (tr Theta ^ tr Theta - tr(Theta ^ Theta))/(8 pi^2)。
    与 omega^(n-2) 相乘后，密度为
        c1^2: (S^2 - |Ric|^2) / (4 pi^2 n (n-1))
        c2:   (S^2 - 2|Ric|^2 + |Rm|^2) / (8 pi^2 n (n-1))

    Args:
        curv: 求积点上的曲率
        atlas: 给定时同时求出积分值
    """
    n = curv.n
    S = curv.S
    densities = {"S": S}
    if n == 1:
        densities["c1"] = S / (2.0 * math.pi)
    else:
        ric_sq = ricci_norm_sq(curv)
        rm_sq = curvature_norm_sq(curv)
        denom = n * (n - 1)
        densities["c1_sq"] = (S ** 2 - ric_sq) / (4.0 * math.pi ** 2 * denom)
        densities["c2"] = (S ** 2 - 2.0 * ric_sq + rm_sq) / (8.0 * math.pi ** 2 * denom)
        # c1 . [omega]^(n-1)：Ric ^ omega^(n-1) = (S/n) omega^n
        densities["c1"] = S / (2.0 * math.pi * n)
    chern = ChernData(source="forms", n=n, densities=densities)
    if atlas is not None:
        for key in ("c1", "c1_sq", "c2"):
            if key in densities:
                chern.numbers[key] = integrate(atlas, densities[key], curv.G)
        chern.numbers["volume"] = integrate(atlas, np.ones(curv.size), curv.G)
    return chern


def class_chern_data(spec: ManifoldSpec, exact: bool = True) -> ChernData:
    """
    类层面的陈数据（乘积上 c2(X x Y) = c2(X) + c1(X)c1(Y) + c2(Y) 已在模型中展开）
    """
    return ChernData(source="classes", n=spec.n, c1=c1_vector(spec, exact=exact), c2=c2_form(spec, exact=exact))


def class_chern_numbers(spec: ManifoldSpec, alpha: KahlerClassVector) -> Dict[str, float]:
    """
    与 chern_forms 的积分对应的类层面数值：c1.alpha^(n-1)、c1^2.alpha^(n-2)、c2.alpha^(n-2)
    """
    n = spec.n
    a = KahlerClassVector(alpha.as_float())
    c1 = make_class(c1_vector(spec))
    out = {"c1": class_pairing(spec, [c1] + [a] * (n - 1)), "volume": class_pairing(spec, [a] * n)}
    if n >= 2:
        out["c1_sq"] = class_pairing(spec, [c1, c1] + [a] * (n - 2))
        out["c2"] = pair_quadratic(spec, c2_form(spec), [a] * (n - 2))
    return {k: float(v) for k, v in out.items()}


def chern_numbers_check(
    spec: ManifoldSpec,
    chern: ChernData,
    alpha: KahlerClassVector,
    tol: Optional[float] = None,
) -> CheckReport:
    """
    Chern-Weil 积分与类运算的比较

    Args:
        spec: 模型流形
        chern: chern_forms 的结果（须含 numbers）
        alpha: 度量所在的类
    """
    if tol is None:
        tol = TOLERANCES["CHERN_NUMBER"]
    if chern.source != "forms" or not chern.numbers:
        raise InvalidInputError("chern_numbers_check needs integrated Chern forms")
    expected = class_chern_numbers(spec, alpha)
    errors = {}
    for key, value in chern.numbers.items():
        if key in expected:
            errors[key] = abs(value - expected[key]) / max(1.0, abs(expected[key]))
    worst = max(errors.values())
    return create_report(
        "chern_numbers",
        worst <= tol,
        measured=dict(chern.numbers),
        bounds=expected,
        tolerance=tol,
        slack=tol - worst,
        provenance=["Chern-Weil quadrature", "exact class arithmetic"],
        message=f"worst relative error {worst:.2e}",
    )
