from __future__ import annotations

import math

import pytest
import sympy

from errors import InvalidInputError
from chern.defects import cw_inequality_audit, my_defect_check, my_defect_MY1, my_defect_weighted
from chern.expansion import EXPANSION_VARIANTS, asymptotic_expansion_check, class_decay_check
from chern.forms import chern_forms, chern_numbers_check
from geometry.curvature import curvature_field
from geometry.metrics import ProductMetric, RadialMetric, TorusMetric
from manifolds.classes import make_class
from manifolds.quadrature import product_atlas, projective_atlas, torus_atlas
from manifolds.spec import class_data_spec, curve_spec, product_spec, projective_spec, torus_spec


def _k3_times_genus2():
    k3 = class_data_spec(2, ["H"], {(0, 0): 2}, [0], [[12]], name="K3")
    return product_spec([k3, curve_spec(2)])


def test_cp1_first_chern_number(cp1, fs1, cp1_atlas) -> None:
    chern = chern_forms(curvature_field(fs1, cp1_atlas.points), cp1_atlas)
    assert chern.numbers["c1"] == pytest.approx(2.0, rel=1e-8)
    assert chern.numbers["volume"] == pytest.approx(2.0 * math.pi, rel=1e-8)
    assert chern_numbers_check(cp1, chern, make_class([2.0 * math.pi])).passed


def test_cp2_chern_numbers(cp2, fs2) -> None:
    atlas = projective_atlas(2, nodes=6)
    chern = chern_forms(curvature_field(fs2, atlas.points), atlas)
    assert chern.numbers["c1_sq"] == pytest.approx(9.0, rel=1e-8)
    assert chern.numbers["c2"] == pytest.approx(3.0, rel=1e-8)
    assert my_defect_MY1(cp2, chern) == pytest.approx(0.0, abs=1e-8)


def test_chern_numbers_do_not_depend_on_the_metric(cp2, fs1, fs2, cp1_atlas) -> None:
    for metric in (fs1, RadialMetric(1, perturbation=[0.3])):
        chern = chern_forms(curvature_field(metric, cp1_atlas.points), cp1_atlas)
        assert chern.numbers["c1"] == pytest.approx(2.0, rel=1e-6)

    atlas = projective_atlas(2, nodes=16)
    for metric in (fs2, RadialMetric(2, perturbation=[0.1, -0.05])):
        chern = chern_forms(curvature_field(metric, atlas.points), atlas)
        assert chern.numbers["c1_sq"] == pytest.approx(9.0, rel=1e-4)
        assert chern.numbers["c2"] == pytest.approx(3.0, rel=1e-4)
        assert chern_numbers_check(cp2, chern, make_class([2.0 * math.pi])).passed


def test_cp1_times_cp1_defect_from_forms(fs1) -> None:
    spec = product_spec([projective_spec(1), projective_spec(1)])
    line = projective_atlas(1, nodes=6)
    atlas = product_atlas([line, line])
    chern = chern_forms(curvature_field(ProductMetric([fs1, fs1]), atlas.points), atlas)
    assert chern.numbers["c1_sq"] == pytest.approx(8.0, rel=1e-8)
    assert chern.numbers["c2"] == pytest.approx(4.0, rel=1e-8)
    assert my_defect_MY1(spec, chern) == pytest.approx(4.0, rel=1e-8)


def test_chern_numbers_check_needs_integrated_forms(cp1, fs1, cp1_atlas) -> None:
    chern = chern_forms(curvature_field(fs1, cp1_atlas.points))
    with pytest.raises(InvalidInputError):
        chern_numbers_check(cp1, chern, make_class([2.0 * math.pi]))


def test_product_of_genus_two_curves_defect_is_exact() -> None:
    surface = product_spec([curve_spec(2), curve_spec(2)])
    report = my_defect_check(surface)
    assert report.passed
    assert report.measured["defect"] == 4
    assert isinstance(report.measured["defect"], sympy.Basic)


def test_defect_on_cp2_is_reported_without_assertion(cp2) -> None:
    report = my_defect_check(cp2)
    assert report.level.value == "info"


def test_defect_needs_a_surface(cp1) -> None:
    with pytest.raises(InvalidInputError):
        my_defect_MY1(cp1)


def test_flat_torus_chern_weil_slack(torus2, flat2) -> None:
    atlas = torus_atlas(torus2, 4)
    report = cw_inequality_audit(torus2, flat2, curvature_field(flat2, atlas.points), atlas)
    assert report.passed
    assert report.measured["volume"] == pytest.approx(8.0)
    assert report.slack == pytest.approx(4.0 / math.pi ** 2, rel=1e-10)


def test_fubini_study_cp2_chern_weil_slack(cp2, fs2) -> None:
    atlas = projective_atlas(2, nodes=6)
    report = cw_inequality_audit(cp2, fs2, curvature_field(fs2, atlas.points), atlas)
    assert report.passed
    assert report.slack == pytest.approx(32.0, rel=1e-8)


def test_weighted_defect_on_curves_times_torus() -> None:
    spec = product_spec([curve_spec(2), curve_spec(2), torus_spec(3)])
    value = my_defect_weighted(spec, None, 0, make_class([1, 1, 1, 1, 1], exact=True))
    assert value == sympy.Rational(48, 5)


def test_weighted_defect_rejects_large_nu() -> None:
    spec = product_spec([curve_spec(2), torus_spec(2)])
    with pytest.raises(InvalidInputError):
        my_defect_weighted(spec, None, 1, make_class([0, 1, 1], exact=True))


def test_weighted_defect_rejects_non_nef_class() -> None:
    spec = product_spec([curve_spec(2), torus_spec(3)])
    with pytest.raises(InvalidInputError):
        my_defect_weighted(spec, None, 0, make_class([-1, 1, 1, 1], exact=True))


@pytest.mark.parametrize("variant", EXPANSION_VARIANTS)
def test_expansion_limit_on_k3_times_genus2(variant: str) -> None:
    spec = _k3_times_genus2()
    report = asymptotic_expansion_check(spec, make_class([1, 1], exact=True), 1, [0.1, 0.05, 0.025, 0.0125], variant)
    assert report.passed
    assert float(report.bounds["defect_limit"]) == pytest.approx(256.0 * math.pi, rel=1e-12)


def test_expansion_rejects_unknown_variant() -> None:
    with pytest.raises(InvalidInputError):
        asymptotic_expansion_check(_k3_times_genus2(), make_class([1, 1], exact=True), 1, [0.1], "sideways")


def test_normalized_flow_class_decay() -> None:
    report = class_decay_check(_k3_times_genus2(), make_class([1, 1], exact=True), 1, [0.5, 1.0, 2.0])
    assert report.passed
    assert report.measured["volume_exponent"] == 2
    values = report.measured["functional_values"]
    assert abs(values[-1]) <= abs(values[0])
