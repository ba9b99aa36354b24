from __future__ import annotations

import json
import shutil

import pandas as pd
import pytest

from app import exit_code, main, run_scenario, run_suite
from components.tasks import Tolerances, run_task
from data.scenarios import load_scenario
from errors import InvalidInputError, ScenarioError


def test_passing_scenario_exits_zero(scenario_dir, tmp_path, capsys) -> None:
    code = main(["hsc-sup", str(scenario_dir / "torus_hsc_sup.json"), "--out", str(tmp_path)])
    assert code == 0
    assert "sup_hsc" in capsys.readouterr().out
    payload = json.loads((tmp_path / "torus_hsc_sup" / "reports.json").read_text(encoding="utf-8"))
    assert payload["meta"]["task"] == "hsc-sup"
    assert {r["name"] for r in payload["reports"]} == {"sup_hsc", "expected_values"}
    assert (tmp_path / "summary.txt").exists()
    assert (tmp_path / "summary.json").exists()
    table = pd.read_csv(tmp_path / "torus_hsc_sup" / "curvature_field.csv")
    assert {"z0_re", "z1_im", "R_0000_re", "R_1111_im", "S", "H_max", "xi1_re"} <= set(table.columns)
    assert len(table) > 0
    assert table["H_max"].abs().max() < 1e-10


def test_violated_bound_exits_one(scenario_dir, tmp_path) -> None:
    path = scenario_dir / "negative" / "royden_small_bound.json"
    assert main(["hsc-sup", str(path), "--out", str(tmp_path)]) == 1
    frame = run_scenario(path)
    failed = frame[~frame["passed"]]
    assert list(failed["check"]) == ["hsc_bound"]


def test_fabricated_trajectory_exits_one(scenario_dir, tmp_path) -> None:
    path = scenario_dir / "negative" / "blowup_fabricated.json"
    frame = run_scenario(path)
    assert list(frame.loc[~frame["passed"], "check"]) == ["blowup_rate"]
    assert main(["flow", str(path), "--out", str(tmp_path)]) == 1


def test_verb_mismatch_exits_two(scenario_dir, tmp_path) -> None:
    assert main(["curvature", str(scenario_dir / "torus_hsc_sup.json"), "--out", str(tmp_path)]) == 2


def test_invalid_scenario_exits_two(write_scenario, tmp_path) -> None:
    path = write_scenario({"task": "chern", "manifold": {"n": 1}})
    assert main(["chern", str(path), "--out", str(tmp_path / "out")]) == 2


def test_non_utf8_scenario_exits_two(tmp_path) -> None:
    path = tmp_path / "binary.json"
    path.write_bytes(b"\xff\xfe{}")
    assert main(["curvature", str(path), "--out", str(tmp_path / "out")]) == 2


def test_non_object_atlas_exits_two(write_scenario, tmp_path) -> None:
    path = write_scenario({"task": "curvature", "manifold": {"kind": "torus", "n": 1}, "atlas": 5})
    assert main(["curvature", str(path), "--out", str(tmp_path / "out")]) == 2


def test_malformed_parameter_value_exits_two(write_scenario, tmp_path) -> None:
    path = write_scenario({
        "task": "hsc-sup",
        "manifold": {"kind": "torus", "n": 2},
        "atlas": {"torus_grid": 4},
        "params": {"A": "two"},
    })
    assert main(["hsc-sup", str(path), "--out", str(tmp_path / "out")]) == 2
    with pytest.raises(ScenarioError) as info:
        run_task(load_scenario(path))
    assert info.value.field == "params"


def test_nonpositive_tolerance_scale_is_rejected(scenario_dir, tmp_path) -> None:
    with pytest.raises(SystemExit) as info:
        main(["hsc-sup", str(scenario_dir / "torus_hsc_sup.json"), "--out", str(tmp_path), "--tolerance-scale", "0"])
    assert info.value.code == 2


def test_empty_suite_passes(tmp_path) -> None:
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["suite", str(empty), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "summary.txt").read_text(encoding="utf-8").strip() == "(no checks)"


def test_suite_concatenates_scenarios(scenario_dir, tmp_path) -> None:
    suite = tmp_path / "suite"
    suite.mkdir()
    for name in ("torus_hsc_sup.json", "genus2_squared_audit.json"):
        shutil.copy(scenario_dir / name, suite / name)
    frame = run_suite(suite)
    assert list(frame["scenario"].unique()) == ["genus2_squared_audit", "torus_hsc_sup"]
    assert exit_code(frame) == 0


def test_seed_override(scenario_dir) -> None:
    frame = run_scenario(scenario_dir / "torus_hsc_sup.json", seed=11)
    assert frame["passed"].all()


def test_domain_errors_become_error_reports(write_scenario) -> None:
    scenario = load_scenario(write_scenario({
        "task": "my-audit",
        "manifold": {"kind": "product", "factors": [{"kind": "curve", "genus": 2}, {"kind": "torus", "n": 2}]},
        "params": {"nu": 1, "class": [0, 1, 1]},
    }))
    result = run_task(scenario)
    assert len(result.reports) == 1
    assert result.reports[0].name == "my-audit"
    assert result.reports[0].level.value == "error"


def test_task_without_metric_is_a_scenario_error(write_scenario) -> None:
    scenario = load_scenario(write_scenario({"task": "hsc-sup", "manifold": {"kind": "curve", "genus": 2}}))
    with pytest.raises(ScenarioError):
        run_task(scenario)


def test_tolerances_scale() -> None:
    tols = Tolerances(10.0)
    assert tols.value(1e-6) == pytest.approx(1e-5)
    with pytest.raises(InvalidInputError):
        Tolerances(0.0)
