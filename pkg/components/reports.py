"""
检查报告组件 - 所有不等式/恒等式检查的统一结果对象
"""

import logging
import math
from typing import List, Dict, Optional, Any
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from config import CHECK_ANCHORS

logger = logging.getLogger(__name__)


class CheckLevel(Enum):
    """检查结果级别枚举"""
    PASS = "pass"
    INFO = "info"
    SKIPPED = "skipped"
    FAIL = "fail"
    ERROR = "error"


@dataclass
class CheckReport:
    """检查报告数据类"""
    name: str
    anchor: str
    level: CheckLevel
    measured: Dict[str, Any] = field(default_factory=dict)
    bounds: Dict[str, Any] = field(default_factory=dict)
    tolerance: float = 0.0
    slack: Optional[float] = None
    provenance: List[str] = field(default_factory=list)
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.level not in (CheckLevel.FAIL, CheckLevel.ERROR)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "level": self.level.value,
            "passed": self.passed,
            "measured": _jsonable(self.measured),
            "bounds": _jsonable(self.bounds),
            "tolerance": _jsonable(self.tolerance),
            "slack": _jsonable(self.slack),
            "provenance": list(self.provenance),
            "message": self.message,
        }


# 级别优先级（数字越小越严重）
LEVEL_PRIORITY = {
    CheckLevel.ERROR: 0,
    CheckLevel.FAIL: 1,
    CheckLevel.SKIPPED: 2,
    CheckLevel.INFO: 3,
    CheckLevel.PASS: 4,
}

# 文本表格中使用的级别标记
LEVEL_NAMES = {
    CheckLevel.PASS: "PASS",
    CheckLevel.INFO: "INFO",
    CheckLevel.SKIPPED: "SKIP",
    CheckLevel.FAIL: "FAIL",
    CheckLevel.ERROR: "ERROR",
}


def _jsonable(value):
    """把 numpy / sympy 数值转换为可 JSON 序列化的 Python 对象"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return [value.real, value.imag]
    if value is None or isinstance(value, str):
        return value
    # sympy 数值或其它对象
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


def create_report(
    name: str,
    passed: Optional[bool],
    measured: Dict[str, Any] = None,
    bounds: Dict[str, Any] = None,
    tolerance: float = 0.0,
    slack: Optional[float] = None,
    provenance: List[str] = None,
    message: str = "",
    anchor_key: Optional[str] = None,
    level: Optional[CheckLevel] = None,
) -> CheckReport:
    """
    创建检查报告

    Args:
        name: 检查名称
        passed: 是否通过；None 表示仅报告数值（INFO）
        measured: 测得量
        bounds: 界
        tolerance: 容差
        slack: 测得量相对界的余量（通过时应 >= -tolerance）
        provenance: 使用的标准答案来源
        message: 说明
        anchor_key: CHECK_ANCHORS 中的键，默认与 name 相同
        level: 显式指定级别（覆盖 passed 推断）

    Returns:
        CheckReport对象
    """
    if level is None:
        if passed is None:
            level = CheckLevel.INFO
        else:
            level = CheckLevel.PASS if passed else CheckLevel.FAIL

    if anchor_key is None:
        anchor_key = name
    anchor = CHECK_ANCHORS.get(anchor_key, anchor_key)

    report = CheckReport(
        name=name,
        anchor=anchor,
        level=level,
        measured=dict(measured or {}),
        bounds=dict(bounds or {}),
        tolerance=tolerance,
        slack=slack,
        provenance=list(provenance or []),
        message=message,
    )
    if not report.passed:
        logger.warning("%s: %s %s", name, LEVEL_NAMES[level], message)
    return report


def skipped_report(name: str, reason: str, anchor_key: Optional[str] = None) -> CheckReport:
    """创建跳过的检查报告"""
    return create_report(name, None, message=reason, anchor_key=anchor_key, level=CheckLevel.SKIPPED)


def error_report(name: str, reason: str, anchor_key: Optional[str] = None, **kwargs) -> CheckReport:
    """创建前提条件不满足 / 输入错误的报告"""
    return create_report(name, False, message=reason, anchor_key=anchor_key, level=CheckLevel.ERROR, **kwargs)


def get_worst_report(reports: List[CheckReport]) -> Optional[CheckReport]:
    """
    获取最严重的报告

    Args:
        reports: 报告列表

    Returns:
        最严重的报告；列表为空时返回 None
    """
    if not reports:
        return None
    return sorted(reports, key=lambda r: LEVEL_PRIORITY.get(r.level, 99))[0]


def all_passed(reports: List[CheckReport]) -> bool:
    """所有报告是否都通过"""
    return all(r.passed for r in reports)


def reports_to_frame(reports: List[CheckReport], scenario: str = "") -> pd.DataFrame:
    """
    把报告列表整理为汇总表（每项检查一行）
    """
    rows = []
    for r in reports:
        rows.append({
            "scenario": scenario,
            "check": r.name,
            "level": LEVEL_NAMES[r.level],
            "passed": r.passed,
            "slack": _jsonable(r.slack),
            "tolerance": _jsonable(r.tolerance),
            "anchor": r.anchor,
            "message": r.message,
        })
    columns = ["scenario", "check", "level", "passed", "slack", "tolerance", "anchor", "message"]
    return pd.DataFrame(rows, columns=columns)


def render_report_table(frame: pd.DataFrame) -> str:
    """
    渲染纯文本汇总表
    """
    if frame.empty:
        return "(no checks)"
    shown = frame.drop(columns=["passed"], errors="ignore")
    return shown.to_string(index=False, max_colwidth=60)
