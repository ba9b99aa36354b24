from __future__ import annotations

import json

import pandas as pd
import pytest

from errors import ScenarioError
from data.scenarios import list_scenarios, load_scenario, load_trajectory
from data.writers import curvature_frame, write_reports_json, write_summary, write_table_csv
from geometry.curvature import curvature_field
from geometry.hsc_search import estimate_from_curvature
from geometry.metrics import ProductMetric, RadialMetric, TorusMetric
from components.reports import create_report, reports_to_frame


def test_shipped_scenarios_all_parse(scenario_dir) -> None:
    paths = list_scenarios(scenario_dir) + list_scenarios(scenario_dir / "negative")
    assert len(paths) >= 18
    for path in paths:
        scenario = load_scenario(path)
        assert scenario.name == path.stem


def test_scenario_defaults(write_scenario) -> None:
    path = write_scenario({"task": "curvature", "manifold": {"kind": "torus", "n": 2}}, "flat.json")
    scenario = load_scenario(path)
    assert scenario.name == "flat"
    assert scenario.seed == 0
    assert isinstance(scenario.metric, TorusMetric)
    assert scenario.params == {}


def test_product_metric_defaults_to_factor_metrics(write_scenario) -> None:
    path = write_scenario({
        "task": "chern",
        "manifold": {"kind": "product", "factors": [{"kind": "projective", "n": 1}, {"kind": "projective", "n": 1}]},
    })
    metric = load_scenario(path).metric
    assert isinstance(metric, ProductMetric)
    assert all(isinstance(f, RadialMetric) for f in metric.factors)


def test_class_data_has_no_metric(write_scenario) -> None:
    path = write_scenario({"task": "my-audit", "manifold": {"kind": "curve", "genus": 2}})
    assert load_scenario(path).metric is None


def test_missing_manifold_kind_names_the_field(write_scenario) -> None:
    path = write_scenario({"task": "curvature", "manifold": {"n": 2}})
    with pytest.raises(ScenarioError) as info:
        load_scenario(path)
    assert info.value.field == "manifold.kind"
    assert str(path) in str(info.value)


@pytest.mark.parametrize(
    "data, field",
    [
        ({"manifold": {"kind": "torus", "n": 1}}, "task"),
        ({"task": "paint", "manifold": {"kind": "torus", "n": 1}}, "task"),
        ({"task": "chern", "manifold": {"kind": "torus", "n": 1}, "colour": "red"}, "colour"),
        ({"task": "chern", "manifold": {"kind": "sphere", "n": 1}}, "manifold.kind"),
        ({"task": "chern", "manifold": {"kind": "torus", "n": 1}, "metric": {"family": "fubini_study"}}, "metric.family"),
        ({"task": "chern", "manifold": {"kind": "torus", "n": 1}, "metric": {"family": "hyperbolic"}}, "metric.family"),
        ({"task": "chern", "manifold": {"kind": "torus", "n": 1}, "seed": "zero"}, "seed"),
        ({"task": "chern", "manifold": {"kind": "product", "factors": [{"kind": "curve"}]}}, "manifold.factors[0].genus"),
    ],
)
def test_invalid_scenarios_name_the_field(write_scenario, data: dict, field: str) -> None:
    with pytest.raises(ScenarioError) as info:
        load_scenario(write_scenario(data))
    assert info.value.field == field


def test_invalid_json_is_a_scenario_error(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ScenarioError):
        load_scenario(path)
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")


def test_class_parameter_length_is_checked(write_scenario) -> None:
    path = write_scenario({"task": "mu-bounds", "manifold": {"kind": "torus", "n": 2}, "params": {"class": [1.0]}})
    scenario = load_scenario(path)
    with pytest.raises(ScenarioError) as info:
        scenario.kahler_class()
    assert info.value.field == "params.class"


def test_integer_class_is_exact(write_scenario) -> None:
    path = write_scenario({"task": "expansion", "manifold": {"kind": "torus", "n": 3}, "params": {"class": [1, 1, 1]}})
    assert load_scenario(path).kahler_class().exact


def test_list_scenarios_rejects_missing_directory(tmp_path) -> None:
    with pytest.raises(ScenarioError):
        list_scenarios(tmp_path / "nowhere")


def test_trajectory_needs_sup_H_column(tmp_path) -> None:
    path = tmp_path / "traj.csv"
    pd.DataFrame({"t": [0.0, 0.1]}).to_csv(path, index=False)
    with pytest.raises(ScenarioError) as info:
        load_trajectory(path, T_num=0.5, n=1)
    assert info.value.field == "sup_H"


def test_reports_json_is_deterministic(tmp_path) -> None:
    reports = [create_report("royden", True, measured={"b": 2.0, "a": 1.0}, slack=0.5)]
    first = write_reports_json(reports, tmp_path / "one" / "reports.json", meta={"scenario": "x"}).read_text(encoding="utf-8")
    second = write_reports_json(reports, tmp_path / "two" / "reports.json", meta={"scenario": "x"}).read_text(encoding="utf-8")
    assert first == second
    payload = json.loads(first)
    assert payload["meta"]["scenario"] == "x"
    assert payload["reports"][0]["name"] == "royden"


def test_summary_writes_text_and_json(tmp_path) -> None:
    frame = reports_to_frame([create_report("berger", True, slack=1e-4)], scenario="fs_cp2")
    paths = write_summary(frame, tmp_path)
    assert "berger" in paths["text"].read_text(encoding="utf-8")
    rows = json.loads(paths["json"].read_text(encoding="utf-8"))["rows"]
    assert rows[0]["scenario"] == "fs_cp2"


def test_curvature_field_table_on_fubini_study(tmp_path, fs1, cp1_atlas) -> None:
    curv = curvature_field(fs1, cp1_atlas.points)
    frame = curvature_frame(curv, estimate_from_curvature(curv, restarts=1))
    assert len(frame) == curv.size
    assert frame["H_max"].to_numpy() == pytest.approx(2.0, rel=1e-8)
    assert frame["R_0000_re"].to_numpy() == pytest.approx(curv.R[:, 0, 0, 0, 0].real)

    path = write_table_csv(frame, tmp_path / "curvature_field.csv")
    table = pd.read_csv(path)
    assert list(table.columns) == list(frame.columns)
    assert table["S"].to_numpy() == pytest.approx(frame["S"].to_numpy(), rel=1e-10)
