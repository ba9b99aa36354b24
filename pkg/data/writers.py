"""
输出模块 - 报告 JSON、轨迹 CSV、解的网格数据与汇总表
"""

import json
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

from continuity.wu_yau import ContinuitySolution
from flows.krf import FlowTrajectory
from geometry.curvature import CurvatureField
from geometry.hsc_search import HSCEstimate
from components.reports import CheckReport, _jsonable, render_report_table

logger = logging.getLogger(__name__)


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def dumps(payload: Dict) -> str:
    """确定性 JSON：键排序、固定缩进"""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)


def write_reports_json(reports: List[CheckReport], path, meta: Dict = None) -> Path:
    """写出一个场景的全部报告"""
    path = _prepare(path)
    payload = {"meta": meta or {}, "reports": [r.to_dict() for r in reports]}
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    logger.debug("wrote %d reports to %s", len(reports), path)
    return path


def write_trajectory_csv(traj: FlowTrajectory, path) -> Path:
    """轨迹快照表（列顺序固定）"""
    path = _prepare(path)
    traj.frame.to_csv(path, index=False, float_format="%.12g")
    return path


def write_solution_csv(solution: ContinuitySolution, path) -> Path:
    """连续性方程解的网格数据：势函数 u、迹与 |w_ref|^2"""
    path = _prepare(path)
    frame = pd.DataFrame({
        "node": np.arange(solution.potential.size),
        "u": solution.potential,
        "trace": solution.trace,
        "ref_norm_sq": solution.ref_norm_sq,
    })
    frame.to_csv(path, index=False, float_format="%.12g")
    return path


def curvature_frame(curv: CurvatureField, estimate: HSCEstimate) -> pd.DataFrame:
    """
    曲率场逐点数据

    列：样本点坐标 (z{i}_re, z{i}_im)、R_{i jbar k lbar} 全部分量 (R_ijkl_re, R_ijkl_im)、
    数量曲率 S、逐点最大全纯截面曲率 H_max 及其取到的方向 (xi{i}_re, xi{i}_im)。
    """
    n = curv.n
    columns = {"point": np.arange(curv.size)}
    for i in range(n):
        columns[f"z{i}_re"] = curv.points[:, i].real
        columns[f"z{i}_im"] = curv.points[:, i].imag
    for index in np.ndindex(n, n, n, n):
        key = "".join(str(i) for i in index)
        values = curv.R[(slice(None),) + index]
        columns[f"R_{key}_re"] = values.real
        columns[f"R_{key}_im"] = values.imag
    columns["S"] = np.real(curv.S)
    columns["H_max"] = estimate.per_point
    for i in range(n):
        columns[f"xi{i}_re"] = estimate.directions[:, i].real
        columns[f"xi{i}_im"] = estimate.directions[:, i].imag
    return pd.DataFrame(columns)


def write_table_csv(frame: pd.DataFrame, path) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format="%.12g")
    return path


def write_residuals_csv(solution: ContinuitySolution, path) -> Path:
    """Newton 残差与阻尼记录"""
    path = _prepare(path)
    damping = [np.nan] + list(solution.damping)
    frame = pd.DataFrame({
        "iteration": np.arange(len(solution.residuals)),
        "residual": solution.residuals,
        "damping": damping[:len(solution.residuals)],
    })
    frame.to_csv(path, index=False, float_format="%.12g")
    return path


def write_summary(frame: pd.DataFrame, out_dir, stem: str = "summary") -> Dict[str, Path]:
    """汇总表写出为纯文本与 JSON"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = out_dir / f"{stem}.txt"
    text.write_text(render_report_table(frame) + "\n", encoding="utf-8")
    js = out_dir / f"{stem}.json"
    js.write_text(dumps({"rows": frame.to_dict(orient="records")}) + "\n", encoding="utf-8")
    return {"text": text, "json": js}
