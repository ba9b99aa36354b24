from __future__ import annotations

import math

import numpy as np
import pytest
import sympy

from errors import InvalidInputError
from manifolds.classes import (
    canonical_class, class_pairing, flow_class, is_kahler, is_nef, make_class, nef_threshold,
    normalized_flow_class, normalized_nef_threshold, numerical_kodaira_dimension, property_A_limit_check,
)
from manifolds.quadrature import build_atlas, integrate, projective_atlas, torus_atlas
from manifolds.spec import class_data_spec, curve_spec, product_spec, projective_spec, torus_spec


def test_projective_volume_is_class_power(cp2) -> None:
    alpha = make_class([2], exact=True)
    assert class_pairing(cp2, [alpha, alpha]) == 4


def test_torus_pairing_counts_both_orderings(torus2) -> None:
    alpha = make_class([2.0, 2.0])
    assert class_pairing(torus2, [alpha, alpha]) == pytest.approx(8.0)


def test_pairing_rejects_wrong_number_of_classes(cp2) -> None:
    with pytest.raises(InvalidInputError):
        class_pairing(cp2, [make_class([1.0])])


def test_product_of_genus_two_curves_has_expected_chern_data() -> None:
    surface = product_spec([curve_spec(2), curve_spec(2)])
    assert surface.n == 2
    assert surface.h11 == 2
    K = canonical_class(surface, exact=True)
    assert list(K.coeffs) == [2, 2]
    assert class_pairing(surface, [K, K]) == 8


def test_torus_rejects_degenerate_lattice() -> None:
    with pytest.raises(InvalidInputError):
        torus_spec(1, [(1.0 + 0j, 2.0 + 0j)])


def test_class_data_requires_symmetric_c2() -> None:
    with pytest.raises(InvalidInputError):
        class_data_spec(2, ["a", "b"], {(0, 1): 1}, [0, 0], [[0, 1], [2, 0]])


def test_kahler_and_nef_cones() -> None:
    spec = torus_spec(2)
    assert is_kahler(spec, make_class([1.0, 2.0]))
    assert not is_kahler(spec, make_class([0.0, 2.0]))
    assert is_nef(spec, make_class([0.0, 2.0]))


def test_nef_threshold_of_fubini_study_class(cp1) -> None:
    assert nef_threshold(cp1, make_class([2 * math.pi])) == pytest.approx(0.5)
    assert nef_threshold(cp1, make_class([4 * math.pi])) == pytest.approx(1.0)


@pytest.mark.parametrize("coeffs", [[1.0, 3.0], [2.0, 0.5], [0.3, 0.3]])
def test_nef_threshold_matches_bisection_on_the_flow_class(coeffs) -> None:
    spec = product_spec([projective_spec(1), projective_spec(2)])
    alpha = make_class(coeffs)
    lam = nef_threshold(spec, alpha)
    assert is_kahler(spec, flow_class(spec, alpha, lam * (1.0 - 1e-9)))
    assert not is_kahler(spec, flow_class(spec, alpha, lam * (1.0 + 1e-9)))

    lo, hi = 0.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if is_kahler(spec, flow_class(spec, alpha, mid)):
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(lam, rel=1e-9)


def test_nef_threshold_is_infinite_when_canonical_class_is_nef(torus2) -> None:
    assert math.isinf(nef_threshold(torus2, make_class([1.0, 1.0])))
    assert math.isinf(normalized_nef_threshold(torus2, make_class([1.0, 1.0])))


def test_normalized_threshold_on_cp1(cp1) -> None:
    # e^-t 2pi - 4pi (1 - e^-t) = 0
    assert normalized_nef_threshold(cp1, make_class([2 * math.pi])) == pytest.approx(math.log(1.5))


def test_flow_class_shrinks_projective_line(cp1) -> None:
    alpha = make_class([2 * math.pi])
    assert flow_class(cp1, alpha, 0.25).as_float()[0] == pytest.approx(math.pi)
    assert normalized_flow_class(cp1, alpha, 0.0).as_float()[0] == pytest.approx(2 * math.pi)
    with pytest.raises(InvalidInputError):
        flow_class(cp1, alpha, -1.0)


def test_exact_flow_class_keeps_pi_symbolic(cp1) -> None:
    alpha = make_class([4], exact=True)
    cls = flow_class(cp1, alpha, sympy.Rational(1, 2))
    assert sympy.simplify(cls.coeffs[0] - (4 - 2 * sympy.pi)) == 0


def test_numerical_kodaira_dimension() -> None:
    assert numerical_kodaira_dimension(torus_spec(2)) == 0
    assert numerical_kodaira_dimension(product_spec([curve_spec(2), curve_spec(2)])) == 2
    assert numerical_kodaira_dimension(product_spec([curve_spec(2), torus_spec(2)])) == 1
    with pytest.raises(InvalidInputError):
        numerical_kodaira_dimension(projective_spec(2))


def test_property_A_sequence_tending_to_zero(torus2) -> None:
    sequence = [(make_class([2.0 ** -k, 2.0 ** -k]), 0.1) for k in range(-1, 6)]
    report = property_A_limit_check(torus2, sequence)
    assert report.passed
    assert report.measured["limit_gap"] == pytest.approx(2 * 0.1 / math.pi * 2.0 ** -5)


def test_property_A_sequence_not_converging_fails(torus2) -> None:
    sequence = [(make_class([1.0, 1.0]), 0.1) for _ in range(6)]
    report = property_A_limit_check(torus2, sequence)
    assert not report.passed
    assert report.measured["limit_gap"] == pytest.approx(2 * 0.1 / math.pi)


def test_property_A_rejects_empty_sequence(torus2) -> None:
    report = property_A_limit_check(torus2, [])
    assert report.level.value == "error"


def test_torus_atlas_integrates_flat_volume(torus2, flat2) -> None:
    atlas = torus_atlas(torus2, 4)
    G = flat2.metric(atlas.points)
    assert integrate(atlas, np.ones(atlas.size), G) == pytest.approx(8.0, rel=1e-12)


def test_projective_atlas_recovers_fubini_study_volume(fs2) -> None:
    atlas = projective_atlas(2, nodes=12)
    G = fs2.metric(atlas.points)
    assert integrate(atlas, np.ones(atlas.size), G) == pytest.approx((2 * math.pi) ** 2, rel=1e-10)


def test_atlas_rejects_class_data_factor() -> None:
    with pytest.raises(InvalidInputError):
        build_atlas(product_spec([curve_spec(2), projective_spec(1)]))
