from __future__ import annotations

import math

import numpy as np
import pytest

from errors import InvalidInputError
from geometry.mu import MuSearchResult, berger_constant, metric_family, mu_lower_bound, mu_sandwich_check, mu_upper_search
from manifolds.classes import make_class
from manifolds.quadrature import projective_atlas


def test_berger_constant_in_low_dimensions() -> None:
    assert berger_constant(1) == pytest.approx(1.0)
    assert berger_constant(2) == pytest.approx(2.0 / (3.0 * math.pi))


def test_lower_bound_on_cp1_equals_fubini_study_curvature(cp1) -> None:
    assert mu_lower_bound(cp1, make_class([2.0 * math.pi])) == pytest.approx(2.0)


def test_lower_bound_on_cp2(cp2) -> None:
    assert mu_lower_bound(cp2, make_class([2.0 * math.pi])) == pytest.approx(2.0 / math.pi)


def test_lower_bound_is_uninformative_on_torus(torus2) -> None:
    assert mu_lower_bound(torus2, make_class([2.0, 2.0])) == pytest.approx(0.0)


def test_lower_bound_requires_kahler_class(cp1) -> None:
    with pytest.raises(InvalidInputError):
        mu_lower_bound(cp1, make_class([-1.0]))


def test_family_base_member_is_the_reference_metric(cp1) -> None:
    family = metric_family(cp1, make_class([2.0 * math.pi]))
    assert family.dimension > 0
    base = family.build(np.zeros(family.dimension))
    assert base.kahler_class()[0] == pytest.approx(2.0 * math.pi)


def test_upper_search_never_exceeds_base_member(cp1) -> None:
    alpha = make_class([2.0 * math.pi])
    result = mu_upper_search(cp1, alpha, atlas=projective_atlas(1, nodes=8), budget=12, restarts=0, seed=0)
    assert result.history[0] == pytest.approx(2.0, abs=1e-6)
    assert result.value <= result.history[0] + 1e-12
    assert result.evaluations == len(result.history)


def test_sandwich_certifies_cp1() -> None:
    upper = MuSearchResult(value=2.0 + 1e-5, params=np.zeros(2), converged=True, evaluations=1, history=[2.0])
    report = mu_sandwich_check(2.0, upper)
    assert report.passed
    assert report.measured["certified"]


def test_sandwich_flags_upper_below_lower() -> None:
    upper = MuSearchResult(value=1.0, params=np.zeros(2), converged=True, evaluations=1, history=[1.0])
    report = mu_sandwich_check(2.0, upper)
    assert not report.passed
