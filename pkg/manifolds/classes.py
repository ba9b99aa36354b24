"""
上同调类运算 - 顶交配对、nef 阈值、流下的类演化、数值小平维数
"""

import itertools
import logging
import math
from functools import lru_cache
from typing import List, Sequence, Tuple, Union, Optional
from dataclasses import dataclass

import numpy as np
import sympy

from config import TOLERANCES
from errors import InvalidInputError
from manifolds.spec import ManifoldSpec, c1_vector, c2_form
from components.reports import CheckReport, create_report, error_report

logger = logging.getLogger(__name__)

Number = Union[float, sympy.Expr]


@dataclass(frozen=True, eq=False)
class KahlerClassVector:
    """
    H^{1,1} 基上的类

    coeffs 为 float 数组或 object 数组（sympy 精确值）。
    """
    coeffs: np.ndarray

    @property
    def exact(self) -> bool:
        return self.coeffs.dtype == object

    def __add__(self, other: "KahlerClassVector") -> "KahlerClassVector":
        return KahlerClassVector(self.coeffs + other.coeffs)

    def __sub__(self, other: "KahlerClassVector") -> "KahlerClassVector":
        return KahlerClassVector(self.coeffs - other.coeffs)

    def __neg__(self) -> "KahlerClassVector":
        return KahlerClassVector(-self.coeffs)

    def __mul__(self, scalar) -> "KahlerClassVector":
        return KahlerClassVector(self.coeffs * scalar)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.coeffs)

    def as_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def make_class(coeffs: Sequence, exact: bool = False) -> KahlerClassVector:
    """由系数构造类"""
    if exact:
        return KahlerClassVector(np.array([sympy.nsimplify(c) for c in coeffs], dtype=object))
    return KahlerClassVector(np.array([float(c) for c in coeffs]))


def zero_class(spec: ManifoldSpec, exact: bool = False) -> KahlerClassVector:
    return make_class([0] * spec.h11, exact=exact)


def first_chern_class(spec: ManifoldSpec, exact: bool = False) -> KahlerClassVector:
    """c1(X)"""
    return KahlerClassVector(c1_vector(spec, exact=exact))


def canonical_class(spec: ManifoldSpec, exact: bool = False) -> KahlerClassVector:
    """c1(K_X) = -c1(X)"""
    return -first_chern_class(spec, exact=exact)


@lru_cache(maxsize=None)
def _distinct_permutations(key: Tuple[int, ...]) -> Tuple[Tuple[int, ...], ...]:
    return tuple(sorted(set(itertools.permutations(key))))


def _check_dimension(spec: ManifoldSpec, count: int, expected: int):
    if count != expected:
        raise InvalidInputError(f"pairing on {spec.describe()} needs {expected} classes, got {count}")


def _multilinear(spec: ManifoldSpec, vectors: List[np.ndarray], exact: bool) -> Number:
    total = sympy.Integer(0) if exact else 0.0
    for key, value in spec.intersection.items():
        v = value if exact else float(value)
        for perm in _distinct_permutations(key):
            term = v
            for vec, idx in zip(vectors, perm):
                term = term * vec[idx]
                if term == 0:
                    break
            total = total + term
    if exact:
        return sympy.simplify(total)
    return float(total)


def class_pairing(spec: ManifoldSpec, classes: Sequence[KahlerClassVector]) -> Number:
    """
    顶交配对 alpha_1 ... alpha_n

    所有类都为精确类时返回 sympy 精确值，否则返回 float。

    Raises:
        InvalidInputError: 类的个数不等于复维数
    """
    _check_dimension(spec, len(classes), spec.n)
    for c in classes:
        if len(c) != spec.h11:
            raise InvalidInputError(f"class has {len(c)} coefficients, basis has {spec.h11}")
    exact = all(c.exact for c in classes)
    vectors = [c.coeffs if exact else c.as_float() for c in classes]
    return _multilinear(spec, vectors, exact)


def pair_quadratic(spec: ManifoldSpec, form: np.ndarray, classes: Sequence[KahlerClassVector]) -> Number:
    """
    以二次型表示的 2 次类 sum Q_ab e_a e_b 与 n-2 个类配对
    """
    _check_dimension(spec, len(classes), spec.n - 2)
    exact = form.dtype == object and all(c.exact for c in classes)
    h = spec.h11
    total = sympy.Integer(0) if exact else 0.0
    if exact:
        basis = [np.array([sympy.Integer(int(i == a)) for i in range(h)], dtype=object) for a in range(h)]
    else:
        basis = list(np.eye(h))
    vectors = [c.coeffs if exact else c.as_float() for c in classes]
    for a in range(h):
        for b in range(h):
            q = form[a, b] if exact else float(form[a, b])
            if q == 0:
                continue
            total = total + q * _multilinear(spec, [basis[a], basis[b]] + vectors, exact)
    if exact:
        return sympy.simplify(total)
    return float(total)


def is_kahler(spec: ManifoldSpec, alpha: KahlerClassVector) -> bool:
    """模型凯勒锥：所有基系数为正"""
    return all(bool(c > 0) for c in alpha.coeffs)


def is_nef(spec: ManifoldSpec, alpha: KahlerClassVector) -> bool:
    """模型 nef 锥：所有基系数非负"""
    return all(bool(c >= 0) for c in alpha.coeffs)


def _require_kahler(spec: ManifoldSpec, alpha: KahlerClassVector):
    if len(alpha) != spec.h11:
        raise InvalidInputError(f"class has {len(alpha)} coefficients, basis has {spec.h11}")
    if not is_kahler(spec, alpha):
        raise InvalidInputError(f"class {alpha.coeffs.tolist()} is not Kaehler on {spec.describe()}")


def nef_threshold(spec: ManifoldSpec, alpha: KahlerClassVector) -> float:
    """
    nef 阈值 lambda = sup{t > 0 : alpha + 2 pi t c1(K_X) 为凯勒类}

    Returns:
        lambda；c1(K_X) 为 nef 时返回 +inf
    """
    _require_kahler(spec, alpha)
    a = alpha.as_float()
    c = c1_vector(spec)
    candidates = [a[k] / (2.0 * math.pi * c[k]) for k in range(len(a)) if c[k] > 0]
    if not candidates:
        return math.inf
    return float(min(candidates))


def normalized_nef_threshold(spec: ManifoldSpec, alpha: KahlerClassVector) -> float:
    """
    归一化流的类奇异时间 sup{t : -2pi(1-e^-t)c1 + e^-t alpha 为凯勒类}
    """
    _require_kahler(spec, alpha)
    a = alpha.as_float()
    c = c1_vector(spec)
    candidates = [
        math.log((a[k] + 2.0 * math.pi * c[k]) / (2.0 * math.pi * c[k]))
        for k in range(len(a)) if c[k] > 0
    ]
    if not candidates:
        return math.inf
    return float(min(candidates))


def flow_class(spec: ManifoldSpec, alpha: KahlerClassVector, t: float) -> KahlerClassVector:
    """凯勒-里奇流下的类 alpha + 2 pi t c1(K_X)"""
    if t < 0:
        raise InvalidInputError(f"flow time must be >= 0, got {t}")
    two_pi = sympy.pi * 2 if alpha.exact else 2.0 * math.pi
    return alpha + canonical_class(spec, exact=alpha.exact) * (two_pi * t)


def normalized_flow_class(spec: ManifoldSpec, alpha: KahlerClassVector, t: float) -> KahlerClassVector:
    """归一化流下的类 -2pi(1-e^-t) c1(X) + e^-t alpha"""
    if t < 0:
        raise InvalidInputError(f"flow time must be >= 0, got {t}")
    if alpha.exact:
        decay = sympy.exp(-sympy.nsimplify(t))
        return first_chern_class(spec, exact=True) * (-2 * sympy.pi * (1 - decay)) + alpha * decay
    decay = math.exp(-t)
    return first_chern_class(spec) * (-2.0 * math.pi * (1.0 - decay)) + alpha * decay


def numerical_kodaira_dimension(spec: ManifoldSpec) -> int:
    """
    数值小平维数 nu = max{k : c1(K_X)^k != 0}

    用全 1 的凯勒类检验 K^k . alpha^(n-k) 是否非零（精确算术）。

    Raises:
        InvalidInputError: K_X 在模型锥中不是 nef
    """
    K = canonical_class(spec, exact=True)
    if not is_nef(spec, K):
        raise InvalidInputError(f"K_X is not nef on {spec.describe()}; numerical dimension undefined")
    ample = make_class([1] * spec.h11, exact=True)
    nu = 0
    for k in range(1, spec.n + 1):
        value = class_pairing(spec, [K] * k + [ample] * (spec.n - k))
        if value != 0:
            nu = k
    return nu


def property_A_limit_check(
    spec: ManifoldSpec,
    sequence: Sequence[Tuple[KahlerClassVector, float]],
    tail_ratio: Optional[float] = None,
) -> CheckReport:
    """
    类序列 (alpha_i, mu_i) 的极限检查

    mu_i*alpha_i 按系数收敛到 0 的判据：末项的最大系数不超过 tail_ratio 乘以
    序列中最大系数，或绝对意义下为零，且后半段单调不增。
    每个 mu_i > 0 的项要求 (n mu_i/pi) alpha_i + c1(K_X) 为凯勒类；
    mu_i = 0 的项要求 K_X 为 nef。

    Args:
        spec: 模型流形
        sequence: [(alpha_i, mu_i), ...]
        tail_ratio: 收敛判据比例，默认使用配置值

    Returns:
        CheckReport
    """
    if tail_ratio is None:
        tail_ratio = TOLERANCES["PROPERTY_A_TAIL"]
    name = "property_A_limit"
    if not sequence:
        return error_report(name, "empty class sequence")

    K = canonical_class(spec)
    norms = []
    cone_ok = []
    for alpha, mu in sequence:
        if mu < 0:
            return error_report(name, f"mu_i must be >= 0, got {mu}")
        if not is_kahler(spec, alpha):
            return error_report(name, f"class {alpha.as_float().tolist()} is not Kaehler")
        a = alpha.as_float()
        norms.append(float(np.max(np.abs(mu * a))))
        if mu > 0:
            shifted = KahlerClassVector(spec.n * mu / math.pi * a) + K
            cone_ok.append(is_kahler(spec, shifted))
        else:
            cone_ok.append(is_nef(spec, K))

    norms = np.array(norms)
    peak = float(norms.max())
    last = float(norms[-1])
    tail = norms[len(norms) // 2:]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * max(peak, 1.0)))
    converged = last <= TOLERANCES["PROPERTY_A_ABS"] or (last <= tail_ratio * peak and monotone)

    n = spec.n
    last_alpha, last_mu = sequence[-1]
    limit = KahlerClassVector(n * last_mu / math.pi * last_alpha.as_float()) + K
    limit_gap = float(np.max(np.abs(limit.as_float() - K.as_float())))
    limit_tol = TOLERANCES["PROPERTY_A_ABS"] + tail_ratio * n / math.pi * peak
    limit_ok = limit_gap <= limit_tol
    passed = converged and limit_ok and all(cone_ok)
    if not converged:
        message = f"mu_i*alpha_i does not tend to 0 (last {last:.3e}, peak {peak:.3e})"
    elif not all(cone_ok):
        message = "some (n mu_i/pi) alpha_i + c1(K_X) is not Kaehler"
    elif not limit_ok:
        message = f"limit class differs from c1(K_X) by {limit_gap:.3e}"
    else:
        message = f"limit class within {limit_gap:.3e} of c1(K_X)"
    return create_report(
        name,
        passed,
        measured={
            "mu_alpha_norms": norms.tolist(),
            "limit_class": limit.as_float().tolist(),
            "limit_gap": limit_gap,
            "cone_checks": cone_ok,
        },
        bounds={"c1_K": K.as_float().tolist(), "tail_ratio": tail_ratio, "limit_gap": limit_tol},
        tolerance=tail_ratio,
        slack=float(tail_ratio * peak - last),
        provenance=["class arithmetic", "coefficientwise convergence in the h11 basis"],
        message=message,
    )
