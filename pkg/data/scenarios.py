"""
场景模块 - JSON 场景文件的读取、校验，以及流形/度量/图册对象的构造
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config import CLI_CONFIG
from errors import GeometryLabError, ScenarioError
from flows.krf import FlowTrajectory, TRAJECTORY_COLUMNS
from geometry.metrics import FourierMode, MetricField, ProductMetric, RadialMetric, TorusMetric, dual_wave
from manifolds.classes import KahlerClassVector, make_class
from manifolds.spec import (
    ManifoldSpec, class_data_spec, curve_spec, product_spec, projective_spec, torus_spec,
)

logger = logging.getLogger(__name__)

# 顶层字段 -> 是否必需
SCENARIO_FIELDS = {
    "name": False,
    "task": True,
    "manifold": True,
    "metric": False,
    "atlas": False,
    "params": False,
    "seed": False,
}

METRIC_FAMILIES = ("flat", "torus", "fubini_study", "radial", "product")


@dataclass
class Scenario:
    """校验后的场景"""
    name: str
    path: Path
    task: str
    seed: int
    spec: ManifoldSpec
    metric: Optional[MetricField]
    atlas: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)

    def kahler_class(self, key: str = "class") -> Optional[KahlerClassVector]:
        """params[key] 给出的类；缺省时取度量的类"""
        coeffs = self.params.get(key)
        if coeffs is None:
            if self.metric is None or self.metric.kahler_class() is None:
                return None
            return make_class(self.metric.kahler_class())
        if len(coeffs) != self.spec.h11:
            raise ScenarioError(self.path, f"params.{key}", f"expected {self.spec.h11} coefficients, got {len(coeffs)}")
        return make_class(coeffs, exact=all(isinstance(c, int) for c in coeffs))

    def resolve(self, relative: str) -> Path:
        """相对场景文件所在目录的路径"""
        return (self.path.parent / relative).resolve()


def _require(data: Dict, key: str, path: Path, prefix: str):
    if not isinstance(data, dict):
        raise ScenarioError(path, prefix.rstrip("."), "expected an object")
    if key not in data:
        raise ScenarioError(path, f"{prefix}{key}", "missing required field")
    return data[key]


def build_manifold(data: Dict, path: Path, prefix: str = "manifold.") -> ManifoldSpec:
    """
    由场景中的 manifold 对象构造模型

    kind: "torus" {n, periods?} | "projective" {n} | "curve" {genus} |
          "class_data" {n, basis, intersection, c1, c2} | "product" {factors}
    """
    kind = _require(data, "kind", path, prefix)
    try:
        if kind == "torus":
            n = int(_require(data, "n", path, prefix))
            periods = data.get("periods")
            if periods is not None:
                periods = [(complex(p[0], p[1]), complex(p[2], p[3])) for p in periods]
            return torus_spec(n, periods)
        if kind == "projective":
            return projective_spec(int(_require(data, "n", path, prefix)))
        if kind == "curve":
            return curve_spec(int(_require(data, "genus", path, prefix)))
        if kind == "class_data":
            inter = {tuple(int(i) for i in key.split(",")): value
                     for key, value in _require(data, "intersection", path, prefix).items()}
            return class_data_spec(
                int(_require(data, "n", path, prefix)),
                _require(data, "basis", path, prefix),
                inter,
                _require(data, "c1", path, prefix),
                _require(data, "c2", path, prefix),
                name=data.get("name", ""),
            )
        if kind == "product":
            factors = _require(data, "factors", path, prefix)
            return product_spec([
                build_manifold(f, path, f"{prefix}factors[{i}].") for i, f in enumerate(factors)
            ])
    except (TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(path, prefix.rstrip("."), str(exc)) from exc
    raise ScenarioError(path, f"{prefix}kind", f"unknown manifold kind '{kind}'")


def default_metric(spec: ManifoldSpec) -> Optional[MetricField]:
    """平坦环面 / Fubini-Study 及其乘积；只有类数据时为 None"""
    if spec.kind == "torus":
        return TorusMetric(spec)
    if spec.kind == "projective":
        return RadialMetric(spec.n)
    if spec.kind == "product" and spec.has_metric():
        return ProductMetric([default_metric(f) for f in spec.factors])
    return None


def build_metric(data: Optional[Dict], spec: ManifoldSpec, path: Path, prefix: str = "metric.") -> Optional[MetricField]:
    """
    family: "flat" | "torus" {areas?, modes?: [{wave, amplitude, phase?}]} |
            "fubini_study" {scale?} | "radial" {scale?, perturbation?} | "product" {factors}
    """
    if data is None:
        return default_metric(spec)
    family = _require(data, "family", path, prefix)
    if family not in METRIC_FAMILIES:
        raise ScenarioError(path, f"{prefix}family", f"unknown metric family '{family}'")
    try:
        if family in ("flat", "torus"):
            if spec.kind != "torus":
                raise ScenarioError(path, f"{prefix}family", f"'{family}' needs a torus, got {spec.describe()}")
            modes = [
                FourierMode(wave=dual_wave(spec, m["wave"]), amplitude=float(m["amplitude"]), phase=float(m.get("phase", 0.0)))
                for m in data.get("modes", [])
            ]
            return TorusMetric(spec, areas=data.get("areas"), modes=modes)
        if family in ("fubini_study", "radial"):
            if spec.kind != "projective":
                raise ScenarioError(path, f"{prefix}family", f"'{family}' needs CP^n, got {spec.describe()}")
            return RadialMetric(spec.n, scale=float(data.get("scale", 1.0)), perturbation=data.get("perturbation", ()))
        factors = _require(data, "factors", path, prefix)
        if spec.kind != "product" or len(factors) != len(spec.factors):
            raise ScenarioError(path, f"{prefix}factors", "factor list does not match the manifold")
        return ProductMetric([
            build_metric(f, s, path, f"{prefix}factors[{i}].") for i, (f, s) in enumerate(zip(factors, spec.factors))
        ])
    except (KeyError, TypeError) as exc:
        raise ScenarioError(path, prefix.rstrip("."), f"malformed metric: {exc}") from exc
    except GeometryLabError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(path, prefix.rstrip("."), str(exc)) from exc


def parse_scenario(data: Dict, path: Path) -> Scenario:
    """校验并构造场景"""
    if not isinstance(data, dict):
        raise ScenarioError(path, "<root>", "scenario must be a JSON object")
    for key, required in SCENARIO_FIELDS.items():
        if required and key not in data:
            raise ScenarioError(path, key, "missing required field")
    unknown = sorted(set(data) - set(SCENARIO_FIELDS))
    if unknown:
        raise ScenarioError(path, unknown[0], "unknown field")
    task = data["task"]
    if task not in CLI_CONFIG["TASKS"]:
        raise ScenarioError(path, "task", f"unknown task '{task}'")
    try:
        spec = build_manifold(data["manifold"], path)
    except ScenarioError:
        raise
    except GeometryLabError as exc:
        raise ScenarioError(path, "manifold", str(exc)) from exc
    metric = build_metric(data.get("metric"), spec, path)
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError(path, "params", "expected an object")
    atlas = data.get("atlas", {})
    if not isinstance(atlas, dict):
        raise ScenarioError(path, "atlas", "expected an object")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError(path, "seed", "expected an integer")
    return Scenario(
        name=data.get("name", path.stem),
        path=path,
        task=task,
        seed=seed,
        spec=spec,
        metric=metric,
        atlas=dict(atlas),
        params=dict(params),
    )


def load_scenario(path) -> Scenario:
    """
    读取场景文件

    Raises:
        ScenarioError: 文件不可读、非 UTF-8、JSON 无法解析或字段不符
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ScenarioError(path, "<file>", "file not found") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(path, "<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    except UnicodeDecodeError as exc:
        raise ScenarioError(path, "<file>", f"not UTF-8 text: {exc.reason}") from exc
    except OSError as exc:
        raise ScenarioError(path, "<file>", str(exc)) from exc
    scenario = parse_scenario(data, path)
    logger.debug("loaded scenario %s (%s on %s)", scenario.name, scenario.task, scenario.spec.describe())
    return scenario


def list_scenarios(directory) -> List[Path]:
    """目录下按文件名排序的场景文件"""
    directory = Path(directory)
    if not directory.is_dir():
        raise ScenarioError(directory, "<directory>", "not a directory")
    return sorted(directory.glob(CLI_CONFIG["SCENARIO_GLOB"]))


def load_trajectory(path, T_num: float, n: int) -> FlowTrajectory:
    """
    从轨迹 CSV 重建 FlowTrajectory（用于离线检查与负向场景）

    T_num 须由调用方给出；CSV 中缺失的可选列以 nan 填充。
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ScenarioError(path, "<file>", "trajectory file not found") from exc
    for column in ("t", "sup_H"):
        if column not in frame.columns:
            raise ScenarioError(path, column, "missing trajectory column")
    frame = frame.reindex(columns=TRAJECTORY_COLUMNS)
    singular = bool(np.isfinite(T_num))
    horizon = float(T_num) if singular else float(frame["t"].max())
    return FlowTrajectory(
        frame=frame,
        T_num=float(T_num) if singular else horizon,
        singular=singular,
        trigger="recorded" if singular else "horizon",
        confidence="recorded",
        horizon=horizon,
        normalized=False,
        n=n,
        kind="csv",
    )
