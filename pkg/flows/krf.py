"""
凯勒-里奇流积分器 - 约化势函数方程的线方法，显式自适应 RK45，奇异时间检测
"""

import logging
import math
from typing import Dict, List, Optional
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import integrate

from config import FLOW_PARAMS
from errors import DegenerateMetricError
from flows.ansatz import FlowAnsatz

logger = logging.getLogger(__name__)

# 轨迹 CSV 的列（前 8 列为固定格式）
TRAJECTORY_COLUMNS = [
    "t", "sup_H", "M_t", "min_eig", "vol", "S_int", "ric_plus_omega_sq_int", "residual",
    "S_sq_int", "sup_S", "sup_rm", "expected_vol", "class_coeff",
]


@dataclass
class FlowTrajectory:
    """
    流的快照序列

    frame: 每个快照一行（列见 TRAJECTORY_COLUMNS）
    T_num: 检测到的奇异时间；未检测到时为 horizon
    trigger: "eigenvalue_floor" | "dt_underflow" | "step_failure" | "residual" | "horizon"
    """
    frame: pd.DataFrame
    T_num: float
    singular: bool
    trigger: str
    confidence: str
    horizon: float
    normalized: bool
    n: int
    kind: str
    states: List[np.ndarray] = field(default_factory=list)
    steps: int = 0
    ansatz: Optional[FlowAnsatz] = None

    @property
    def times(self) -> np.ndarray:
        return self.frame["t"].to_numpy()

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()


def _segment_state(segments, t: float) -> np.ndarray:
    for t0, t1, interp in segments:
        if t0 <= t <= t1:
            return interp(t)
    raise ValueError(f"time {t} outside the integrated range")


def run_krf(
    ansatz: FlowAnsatz,
    horizon: Optional[float] = None,
    snapshots: Optional[int] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    max_step: float = np.inf,
    normalized: bool = False,
) -> FlowTrajectory:
    """
    积分约化后的凯勒-里奇流

    逐步推进 RK45，每步之后检查：
        - 相对初始度量的最小特征值低于下限（线性插值穿越时刻）
        - 步长下溢或积分器失败（低置信度奇异）
        - 梯形一致性残差为 nan 或超过上限

    Args:
        ansatz: 约化（RadialAnsatz / TubeAnsatz）
        horizon: 积分时长
        snapshots: 均匀快照数
        rtol, atol: RK45 容差
        max_step: 最大步长
        normalized: True 时积分 d_t omega = -Ric - omega

    Returns:
        FlowTrajectory

    Raises:
        DegenerateMetricError: 初始数据退化
    """
    if horizon is None:
        horizon = FLOW_PARAMS["HORIZON"]
    if snapshots is None:
        snapshots = FLOW_PARAMS["SNAPSHOTS"]
    if rtol is None:
        rtol = FLOW_PARAMS["RTOL"]
    if atol is None:
        atol = FLOW_PARAMS["ATOL"]
    floor = FLOW_PARAMS["EIGEN_FLOOR"]

    y0 = ansatz.initial_state()
    eig0 = ansatz.min_eig(0.0, y0, normalized)
    if not np.isfinite(eig0) or eig0 <= floor:
        raise DegenerateMetricError(0.0, eig0, "initial flow data is degenerate")

    def fun(t, y):
        return ansatz.rhs(t, y, normalized)

    solver = integrate.RK45(fun, 0.0, y0, horizon, rtol=rtol, atol=atol, max_step=max_step)
    segments = []
    residuals = [(0.0, 0.0)]
    t_prev, y_prev, f_prev, eig_prev = 0.0, y0, solver.f.copy(), eig0
    T_num, trigger, confidence = horizon, "horizon", "high"
    steps = 0

    while solver.status == "running":
        if steps >= FLOW_PARAMS["MAX_STEPS"]:
            trigger, confidence, T_num = "step_limit", "low", t_prev
            break
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            logger.debug("integrator failed at t=%.6g: %s", t_prev, message)
            trigger, confidence, T_num = "step_failure", "low", t_prev
            break
        t, y = solver.t, solver.y
        dt = t - t_prev
        scale = 1.0 + float(np.max(np.abs(f_prev)))
        drift = y - y_prev - 0.5 * dt * (f_prev + solver.f)
        residual = float(np.max(np.abs(drift))) / (dt * scale) if dt > 0 else math.nan
        eig = ansatz.min_eig(t, y, normalized)

        if not np.isfinite(eig) or eig < floor:
            if np.isfinite(eig) and eig_prev > eig:
                T_num = t_prev + (eig_prev - floor) / (eig_prev - eig) * dt
            else:
                T_num = t_prev
            trigger = "eigenvalue_floor"
            segments.append((t_prev, t, solver.dense_output()))
            break
        if not np.isfinite(residual) or residual > FLOW_PARAMS["RESIDUAL_CAP"]:
            trigger, T_num = "residual", t_prev
            break
        segments.append((t_prev, t, solver.dense_output()))
        residuals.append((t, residual))
        if solver.step_size is not None and solver.step_size < FLOW_PARAMS["DT_UNDERFLOW"] and solver.status == "running":
            trigger, confidence, T_num = "dt_underflow", "low", t
            break
        t_prev, y_prev, f_prev, eig_prev = t, y.copy(), solver.f.copy(), eig

    singular = trigger != "horizon"
    logger.info("flow (%s, normalized=%s): %d steps, T_num=%.6g via %s", ansatz.kind, normalized, steps, T_num, trigger)

    # 只在可靠区间内取快照：奇异时截止到 T_num 之前
    grid = np.linspace(0.0, horizon, snapshots + 1)
    last_good = segments[-1][1] if segments else 0.0
    limit = min(T_num, last_good) if singular else horizon
    times = [t for t in grid if t < limit or (not singular and t <= limit)]
    if singular and trigger == "eigenvalue_floor":
        times = [t for t in times if t < T_num]

    rows: List[Dict] = []
    states: List[np.ndarray] = []
    warm = None
    res_t = np.array([r[0] for r in residuals])
    res_v = np.array([r[1] for r in residuals])
    for t in times:
        y = y0.copy() if t == 0.0 else _segment_state(segments, t)
        diag, warm = ansatz.diagnostics(t, y, normalized, warm=warm)
        past = res_v[res_t <= t + 1e-15]
        diag["t"] = float(t)
        diag["residual"] = float(np.max(past)) if past.size else 0.0
        diag["expected_vol"] = ansatz.expected_volume(t, normalized) if _class_alive(ansatz, t, normalized) else 0.0
        rows.append(diag)
        states.append(y)
    frame = pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)
    return FlowTrajectory(
        frame=frame,
        T_num=float(T_num),
        singular=singular,
        trigger=trigger,
        confidence=confidence,
        horizon=float(horizon),
        normalized=normalized,
        n=ansatz.n,
        kind=ansatz.kind,
        states=states,
        steps=steps,
        ansatz=ansatz,
    )


def _class_alive(ansatz: FlowAnsatz, t: float, normalized: bool) -> bool:
    return bool(np.all(ansatz.expected_class(t, normalized).as_float() > 0))


def run_normalized_krf(ansatz: FlowAnsatz, **kwargs) -> FlowTrajectory:
    """归一化流 d_t omega = -Ric(omega) - omega"""
    return run_krf(ansatz, normalized=True, **kwargs)
