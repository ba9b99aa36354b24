"""
图表组件模块 - 使用Plotly绘制流轨迹、连续性方程残差与检查汇总
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from config import CHART_CONFIG, FLOW_PARAMS
from continuity.wu_yau import ContinuitySolution
from flows.krf import FlowTrajectory

logger = logging.getLogger(__name__)

CHART_COLORS = CHART_CONFIG["COLORS"]


def get_chart_layout(title: str, height: int = None) -> dict:
    """
    获取统一的图表布局配置
    """
    if height is None:
        height = CHART_CONFIG["HEIGHT"]
    return dict(
        title=dict(text=title, font=dict(size=18), x=0.5),
        height=height,
        template=CHART_CONFIG["TEMPLATE"],
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        margin=dict(l=60, r=40, t=80, b=60),
        hovermode="x unified",
    )


def create_trajectory_chart(traj: FlowTrajectory, title: str = "") -> go.Figure:
    """
    流轨迹图：sup H 与爆破速率参考线、迹 M(t)、相对最小特征值

    Args:
        traj: 流轨迹
        title: 图标题

    Returns:
        Plotly Figure对象
    """
    frame = traj.frame
    if frame.empty:
        return go.Figure().update_layout(title="no snapshots")

    fig = make_subplots(
        rows=3, cols=1,
        shared_xaxes=True,
        vertical_spacing=0.08,
        row_heights=[0.45, 0.3, 0.25],
        subplot_titles=("sup H", "M(t)", "min eigenvalue"),
    )
    t = frame["t"]
    fig.add_trace(
        go.Scatter(x=t, y=frame["sup_H"], mode="lines+markers", name="sup H",
                   line=dict(color=CHART_COLORS["primary"], width=2)),
        row=1, col=1,
    )
    if traj.singular:
        # (T - t) sup H >= 1/n
        window = t < traj.T_num
        fig.add_trace(
            go.Scatter(x=t[window], y=1.0 / (traj.n * (traj.T_num - t[window])), mode="lines",
                       name="1/(n(T-t))", line=dict(color=CHART_COLORS["bound"], dash="dash")),
            row=1, col=1,
        )
        fig.add_vline(x=traj.T_num, line_dash="dot", line_color=CHART_COLORS["neutral"],
                      annotation_text=f"T_num {traj.T_num:.4g}", annotation_position="top left")
        fig.add_vline(x=FLOW_PARAMS["BLOWUP_WINDOW"] * traj.T_num, line_dash="dot",
                      line_color=CHART_COLORS["neutral"])

    if not frame["M_t"].isna().all():
        fig.add_trace(
            go.Scatter(x=t, y=frame["M_t"], mode="lines", name="M(t)",
                       line=dict(color=CHART_COLORS["secondary"], width=1.5)),
            row=2, col=1,
        )
    if not frame["min_eig"].isna().all():
        fig.add_trace(
            go.Scatter(x=t, y=frame["min_eig"], mode="lines", name="min eig",
                       line=dict(color=CHART_COLORS["neutral"], width=1.5)),
            row=3, col=1,
        )
        fig.add_hline(y=FLOW_PARAMS["EIGEN_FLOOR"], line_dash="dash", line_color=CHART_COLORS["bound"], row=3, col=1)

    fig.update_layout(**get_chart_layout(title or f"{traj.kind} flow ({traj.trigger})"))
    fig.update_xaxes(title_text="t", row=3, col=1)
    return fig


def create_residual_chart(solution: ContinuitySolution) -> go.Figure:
    """Newton 残差（对数坐标）"""
    residuals = np.asarray(solution.residuals, dtype=float)
    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=np.arange(residuals.size), y=residuals, mode="lines+markers", name="residual",
        line=dict(color=CHART_COLORS["primary"], width=2),
    ))
    fig.update_layout(**get_chart_layout(f"Newton residuals at t = {solution.t:g}", height=400))
    fig.update_yaxes(type="log", title_text="relative residual")
    fig.update_xaxes(title_text="iteration")
    return fig


def create_summary_chart(frame: pd.DataFrame) -> go.Figure:
    """
    检查汇总图：每项检查的松弛量，颜色表示是否通过
    """
    shown = frame.dropna(subset=["slack"])
    shown = shown[pd.to_numeric(shown["slack"], errors="coerce").notna()]
    if shown.empty:
        return go.Figure().update_layout(title="no checks with a numeric slack")
    labels = shown["scenario"].astype(str) + ": " + shown["check"].astype(str)
    colors = [CHART_COLORS["pass"] if ok else CHART_COLORS["fail"] for ok in shown["passed"]]
    fig = go.Figure(go.Bar(
        x=pd.to_numeric(shown["slack"]),
        y=labels,
        orientation="h",
        marker_color=colors,
        hovertext=shown["message"],
    ))
    fig.add_vline(x=0.0, line_color=CHART_COLORS["neutral"])
    fig.update_layout(**get_chart_layout("check slack", height=max(300, 28 * len(shown))))
    fig.update_layout(hovermode="closest")
    return fig


def save_chart(fig: go.Figure, path) -> Optional[Path]:
    """写出独立 HTML（plotly.js 走 CDN）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(str(path), include_plotlyjs="cdn")
    logger.debug("wrote chart %s", path)
    return path
