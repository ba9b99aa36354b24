from __future__ import annotations

import json
from pathlib import Path

import pytest

from geometry.metrics import RadialMetric, TorusMetric
from manifolds.quadrature import build_atlas
from manifolds.spec import projective_spec, torus_spec

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def scenario_dir() -> Path:
    return ROOT / "scenarios"


@pytest.fixture
def cp1():
    return projective_spec(1)


@pytest.fixture
def cp2():
    return projective_spec(2)


@pytest.fixture
def torus2():
    return torus_spec(2)


@pytest.fixture
def fs1() -> RadialMetric:
    return RadialMetric(1)


@pytest.fixture
def fs2() -> RadialMetric:
    return RadialMetric(2)


@pytest.fixture
def flat2(torus2) -> TorusMetric:
    return TorusMetric(torus2)


@pytest.fixture
def cp1_atlas(cp1):
    return build_atlas(cp1, {"projective_nodes": 24})


@pytest.fixture
def write_scenario(tmp_path):
    def write(data: dict, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write
