from __future__ import annotations

import json
import math

import numpy as np
import sympy

from config import CHECK_ANCHORS
from components.reports import (
    CheckLevel, all_passed, create_report, error_report, get_worst_report, render_report_table,
    reports_to_frame, skipped_report,
)


def test_level_follows_passed_flag() -> None:
    assert create_report("royden", True).level == CheckLevel.PASS
    assert create_report("royden", False).level == CheckLevel.FAIL
    assert create_report("sup_H", None).level == CheckLevel.INFO


def test_skipped_and_info_reports_count_as_passed() -> None:
    reports = [skipped_report("blowup_rate", "no singularity"), create_report("sup_rm", None)]
    assert all_passed(reports)
    assert not all_passed(reports + [error_report("existence", "A must be positive")])


def test_anchor_comes_from_check_anchors() -> None:
    report = create_report("kahler_symmetry", True)
    assert report.anchor == CHECK_ANCHORS["kahler_symmetry"]
    assert create_report("unlisted_check", True).anchor == "unlisted_check"


def test_worst_report_prefers_errors() -> None:
    reports = [
        create_report("a", True),
        create_report("b", False),
        error_report("c", "bad input"),
        skipped_report("d", "nothing to do"),
    ]
    assert get_worst_report(reports).name == "c"
    assert get_worst_report([]) is None


def test_to_dict_is_json_serializable() -> None:
    report = create_report(
        "expansion",
        True,
        measured={"values": np.array([1.0, 2.0]), "point": np.array([0.1 + 0.2j]), "gap": math.nan},
        bounds={"limit": 256 * sympy.pi, "count": np.int64(3)},
        slack=np.float64(0.5),
    )
    payload = json.loads(json.dumps(report.to_dict()))
    assert payload["level"] == "pass"
    assert payload["measured"]["values"] == [1.0, 2.0]
    assert payload["measured"]["point"] == [[0.1, 0.2]]
    assert payload["measured"]["gap"] == "nan"
    assert payload["bounds"]["limit"] == float(256 * sympy.pi)
    assert payload["bounds"]["count"] == 3


def test_frame_has_one_row_per_check() -> None:
    reports = [create_report("royden", True, slack=0.25), create_report("berger", False, slack=-1e-2)]
    frame = reports_to_frame(reports, scenario="fs_cp2")
    assert list(frame["check"]) == ["royden", "berger"]
    assert list(frame["passed"]) == [True, False]
    assert (frame["scenario"] == "fs_cp2").all()
    text = render_report_table(frame)
    assert "FAIL" in text and "royden" in text


def test_empty_frame_renders_placeholder() -> None:
    assert render_report_table(reports_to_frame([])) == "(no checks)"
