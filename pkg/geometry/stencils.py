"""
四阶中心差分模板 - 周期（wrap）与偶延拓（reflect）边界
"""

from functools import lru_cache
from typing import Dict

import numpy as np
from scipy import ndimage, sparse

from errors import StencilError

# 偏移 -r..r 上的权重，精度 O(h^4)
STENCILS: Dict[int, np.ndarray] = {
    0: np.array([1.0]),
    1: np.array([1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12]),
    2: np.array([-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12]),
    3: np.array([1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8]),
    4: np.array([-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6]),
}

BOUNDARY_MODES = ("wrap", "reflect")


def _weights(order: int) -> np.ndarray:
    if order not in STENCILS:
        raise StencilError(f"no stencil for derivative order {order}")
    return STENCILS[order]


def derivative(values: np.ndarray, order: int, h: float, axis: int = 0, mode: str = "wrap") -> np.ndarray:
    """
    沿一个轴的 order 阶导数

    Args:
        values: 网格函数
        order: 导数阶数 0..4
        h: 网格步长
        axis: 轴
        mode: "wrap" 为周期；"reflect" 为关于半格点的偶延拓
    """
    if mode not in BOUNDARY_MODES:
        raise StencilError(f"unsupported boundary mode '{mode}'")
    w = _weights(order)
    if values.shape[axis] < len(w):
        raise StencilError(f"grid of {values.shape[axis]} nodes too small for a {len(w)}-point stencil")
    if order == 0:
        return np.array(values, dtype=float, copy=True)
    return ndimage.correlate1d(values, w, axis=axis, mode=mode) / h ** order


def mixed_derivative(values: np.ndarray, orders, h, mode: str = "wrap") -> np.ndarray:
    """
    多维网格上的混合偏导 prod_a d^{orders[a]}/dx_a^{orders[a]}
    """
    out = values
    for axis, (order, step) in enumerate(zip(orders, h)):
        if order:
            out = derivative(out, order, step, axis=axis, mode=mode)
    return out


@lru_cache(maxsize=64)
def derivative_matrix(size: int, order: int, h: float, mode: str = "wrap") -> sparse.csr_matrix:
    """
    一维差分算子的稀疏矩阵（行即模板，边界按 mode 处理）
    """
    if order == 0:
        return sparse.identity(size, format="csr")
    dense = derivative(np.eye(size), order, h, axis=0, mode=mode)
    return sparse.csr_matrix(dense)
