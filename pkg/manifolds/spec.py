"""
模型流形模块 - 环面 / 射影空间 / 曲线与类数据 / 乘积的声明式描述
"""

import logging
from typing import Dict, Tuple, Optional, List, Sequence
from dataclasses import dataclass, field
from math import comb

import numpy as np
import sympy

from errors import InvalidInputError

logger = logging.getLogger(__name__)

MANIFOLD_KINDS = ("torus", "projective", "curve", "class_data", "product")


@dataclass(frozen=True, eq=False)
class ManifoldSpec:
    """
    模型流形

    intersection 以排序后的指标多重集为键，值为顶交数，因而对所有槽位对称。
    c2 以 H^{1,1} 基上的对称二次型 Q 表示：c2 = sum Q_ab e_a e_b。
    """
    kind: str
    n: int
    basis: Tuple[str, ...]
    intersection: Dict[Tuple[int, ...], sympy.Rational]
    c1: Tuple[sympy.Rational, ...]
    c2: Tuple[Tuple[sympy.Rational, ...], ...]
    periods: Optional[Tuple[Tuple[complex, complex], ...]] = None
    genus: Optional[int] = None
    factors: Tuple["ManifoldSpec", ...] = field(default_factory=tuple)
    name: str = ""

    @property
    def h11(self) -> int:
        return len(self.basis)

    def leaves(self) -> List["ManifoldSpec"]:
        """乘积展开后的非乘积因子"""
        if self.kind != "product":
            return [self]
        out = []
        for f in self.factors:
            out.extend(f.leaves())
        return out

    def has_metric(self) -> bool:
        """所有因子都有可计算的度量"""
        return all(leaf.kind in ("torus", "projective") for leaf in self.leaves())

    def has_projective_factor(self) -> bool:
        return any(leaf.kind == "projective" for leaf in self.leaves())

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.kind == "product":
            return " x ".join(f.describe() for f in self.factors)
        if self.kind == "torus":
            return f"T^{self.n}"
        if self.kind == "projective":
            return f"CP^{self.n}"
        if self.kind == "curve":
            return f"C_g{self.genus}"
        return f"classdata^{self.n}"


def _validate(spec: ManifoldSpec) -> ManifoldSpec:
    """检查维数、基与交数张量的一致性"""
    if spec.kind not in MANIFOLD_KINDS:
        raise InvalidInputError(f"unknown manifold kind '{spec.kind}'")
    if spec.n < 1:
        raise InvalidInputError(f"complex dimension must be >= 1, got {spec.n}")
    h = spec.h11
    if h == 0:
        raise InvalidInputError("empty h11 basis")
    for key in spec.intersection:
        if len(key) != spec.n or any(i < 0 or i >= h for i in key):
            raise InvalidInputError(f"intersection key {key} incompatible with n={spec.n}, h11={h}")
        if tuple(sorted(key)) != key:
            raise InvalidInputError(f"intersection key {key} is not sorted")
    if len(spec.c1) != h:
        raise InvalidInputError(f"c1 has {len(spec.c1)} entries, basis has {h}")
    if len(spec.c2) != h or any(len(row) != h for row in spec.c2):
        raise InvalidInputError("c2 quadratic form must be h11 x h11")
    for a in range(h):
        for b in range(h):
            if spec.c2[a][b] != spec.c2[b][a]:
                raise InvalidInputError("c2 quadratic form must be symmetric")
    if spec.kind == "torus" and any(c != 0 for c in spec.c1):
        raise InvalidInputError("torus must have c1 = 0")
    return spec


def _rational(value) -> sympy.Rational:
    return sympy.Rational(sympy.nsimplify(value))


def _zero_form(h: int) -> Tuple[Tuple[sympy.Rational, ...], ...]:
    return tuple(tuple(sympy.Integer(0) for _ in range(h)) for _ in range(h))


def torus_spec(n: int, periods: Optional[Sequence[Tuple[complex, complex]]] = None) -> ManifoldSpec:
    """
    复环面 E_1 x ... x E_n（椭圆曲线乘积）

    Args:
        n: 复维数
        periods: 每个因子的格生成元 (p_k, q_k)，默认 (1, i)

    Returns:
        ManifoldSpec；基 e_k 为第 k 个因子面积形式的拉回，e_1...e_n = 1
    """
    if periods is None:
        periods = [(1.0 + 0j, 1j)] * n
    periods = tuple((complex(p), complex(q)) for p, q in periods)
    if len(periods) != n:
        raise InvalidInputError(f"torus of dimension {n} needs {n} period pairs, got {len(periods)}")
    for p, q in periods:
        if abs((p.conjugate() * q).imag) < 1e-14:
            raise InvalidInputError(f"degenerate lattice ({p}, {q})")
    spec = ManifoldSpec(
        kind="torus",
        n=n,
        basis=tuple(f"e{k + 1}" for k in range(n)),
        intersection={tuple(range(n)): sympy.Integer(1)},
        c1=tuple(sympy.Integer(0) for _ in range(n)),
        c2=_zero_form(n),
        periods=periods,
    )
    return _validate(spec)


def projective_spec(n: int) -> ManifoldSpec:
    """
    复射影空间 CP^n；基为超平面类 h，h^n = 1，c1 = (n+1)h，c2 = C(n+1,2) h^2
    """
    c2_coeff = sympy.Integer(comb(n + 1, 2)) if n >= 2 else sympy.Integer(0)
    spec = ManifoldSpec(
        kind="projective",
        n=n,
        basis=("h",),
        intersection={(0,) * n: sympy.Integer(1)},
        c1=(sympy.Integer(n + 1),),
        c2=((c2_coeff,),),
    )
    return _validate(spec)


def curve_spec(genus: int) -> ManifoldSpec:
    """
    亏格 g 曲线（仅类数据，无度量）；基为点类，c1 = 2 - 2g
    """
    if genus < 0:
        raise InvalidInputError(f"genus must be >= 0, got {genus}")
    spec = ManifoldSpec(
        kind="curve",
        n=1,
        basis=("pt",),
        intersection={(0,): sympy.Integer(1)},
        c1=(sympy.Integer(2 - 2 * genus),),
        c2=_zero_form(1),
        genus=genus,
    )
    return _validate(spec)


def class_data_spec(
    n: int,
    basis: Sequence[str],
    intersection: Dict[Tuple[int, ...], float],
    c1: Sequence[float],
    c2: Sequence[Sequence[float]],
    name: str = "",
) -> ManifoldSpec:
    """
    一般类数据因子（例如带极化的 K3 曲面：H^2 = 2，c1 = 0，c2 = 12 H^2）
    """
    inter = {}
    for key, value in intersection.items():
        skey = tuple(sorted(int(i) for i in key))
        inter[skey] = _rational(value)
    spec = ManifoldSpec(
        kind="class_data",
        n=n,
        basis=tuple(basis),
        intersection=inter,
        c1=tuple(_rational(c) for c in c1),
        c2=tuple(tuple(_rational(q) for q in row) for row in c2),
        name=name,
    )
    return _validate(spec)


def product_spec(factors: Sequence[ManifoldSpec]) -> ManifoldSpec:
    """
    乘积流形 X_1 x ... x X_k

    基为各因子基的拼接；交数在各因子交数之积上分裂；
    c2(X x Y) = c2(X) + c1(X)c1(Y) + c2(Y)。
    """
    factors = tuple(factors)
    if len(factors) < 2:
        raise InvalidInputError("a product needs at least two factors")

    spec = factors[0]
    for other in factors[1:]:
        spec = _product_pair(spec, other)
    spec = ManifoldSpec(
        kind="product",
        n=spec.n,
        basis=spec.basis,
        intersection=spec.intersection,
        c1=spec.c1,
        c2=spec.c2,
        factors=factors,
    )
    return _validate(spec)


def _product_pair(x: ManifoldSpec, y: ManifoldSpec) -> ManifoldSpec:
    hx, hy = x.h11, y.h11
    h = hx + hy

    inter = {}
    for kx, vx in x.intersection.items():
        for ky, vy in y.intersection.items():
            key = kx + tuple(hx + i for i in ky)
            inter[key] = vx * vy

    q = [[sympy.Integer(0)] * h for _ in range(h)]
    for a in range(hx):
        for b in range(hx):
            q[a][b] = x.c2[a][b]
    for a in range(hy):
        for b in range(hy):
            q[hx + a][hx + b] = y.c2[a][b]
    # 交叉项 c1(X)c1(Y) 对称地分到两个位置
    half = sympy.Rational(1, 2)
    for a in range(hx):
        for b in range(hy):
            cross = half * x.c1[a] * y.c1[b]
            q[a][hx + b] = cross
            q[hx + b][a] = cross

    xb = x.basis if x.kind == "product" else tuple(f"{x.describe()}.{b}" for b in x.basis)
    yb = y.basis if y.kind == "product" else tuple(f"{y.describe()}.{b}" for b in y.basis)
    return ManifoldSpec(
        kind="product",
        n=x.n + y.n,
        basis=xb + yb,
        intersection=inter,
        c1=tuple(x.c1) + tuple(y.c1),
        c2=tuple(tuple(row) for row in q),
        factors=(x, y),
    )


def factor_offsets(spec: ManifoldSpec) -> List[Tuple[ManifoldSpec, int, int]]:
    """
    各叶因子在拼接基与拼接坐标中的起点

    Returns:
        [(leaf, basis_offset, coordinate_offset), ...]
    """
    out = []
    b_off = 0
    z_off = 0
    for leaf in spec.leaves():
        out.append((leaf, b_off, z_off))
        b_off += leaf.h11
        z_off += leaf.n
    return out


def c1_vector(spec: ManifoldSpec, exact: bool = False) -> np.ndarray:
    """第一陈类系数"""
    if exact:
        return np.array(list(spec.c1), dtype=object)
    return np.array([float(c) for c in spec.c1])


def c2_form(spec: ManifoldSpec, exact: bool = False) -> np.ndarray:
    """第二陈类的对称二次型"""
    if exact:
        return np.array([list(row) for row in spec.c2], dtype=object)
    return np.array([[float(q) for q in row] for row in spec.c2])
