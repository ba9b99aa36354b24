"""
异常层级 - 实验室中所有可预期的失败
"""

from typing import Optional, List


class GeometryLabError(Exception):
    """实验室异常基类"""


class InvalidInputError(GeometryLabError, ValueError):
    """输入被拒绝（维数不符、类不是凯勒类、参数越界等）"""


class DegenerateMetricError(GeometryLabError):
    """度量在某点不再正定"""

    def __init__(self, point, min_eigenvalue: float, message: Optional[str] = None):
        self.point = point
        self.min_eigenvalue = float(min_eigenvalue)
        if message is None:
            message = f"metric not positive definite at {point!r} (min eigenvalue {self.min_eigenvalue:.3e})"
        super().__init__(message)


class StencilError(GeometryLabError):
    """有限差分模板越出定义域"""


class PreconditionError(GeometryLabError):
    """调用方承诺的界不成立"""


class InfeasibleError(InvalidInputError):
    """在给定参数下类不是凯勒类"""


class NonConvergenceError(GeometryLabError):
    """Newton 迭代发散，携带阻尼记录"""

    def __init__(self, message: str, residuals: List[float], damping: List[float]):
        self.residuals = list(residuals)
        self.damping = list(damping)
        super().__init__(message)


class ScenarioError(GeometryLabError):
    """场景文件不符合格式，指明文件与字段"""

    def __init__(self, path, field: str, reason: str):
        self.path = str(path)
        self.field = field
        self.reason = reason
        super().__init__(f"{self.path}: field '{field}': {reason}")
