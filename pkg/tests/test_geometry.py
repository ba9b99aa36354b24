from __future__ import annotations

import math

import numpy as np
import pytest

from errors import DegenerateMetricError, InvalidInputError, StencilError
from geometry.bounds import (
    berger_identity_check, product_hsc_check, rational_curve_bound_check, royden_bound_check,
    royden_refined_check, simultaneous_frame,
)
from geometry.curvature import (
    curvature_field, curvature_tensor, fd_convergence_order, frame_tensor, hsc, kahler_symmetry_check, sup_rm_norm,
)
from flows.ansatz import TubeAnsatz
from geometry.hsc_search import estimate_from_curvature, maximize_quartic, sup_hsc
from geometry.metrics import FourierMode, RadialMetric, ScaledMetric, TorusMetric, check_positive, dual_wave
from geometry.stencils import derivative, derivative_matrix
from manifolds.quadrature import build_atlas, projective_atlas, torus_atlas
from manifolds.spec import torus_spec


def _wavy_torus(spec, amplitude: float = 0.02) -> TorusMetric:
    wave = dual_wave(spec, [1, 0] + [0, 0] * (spec.n - 1))
    return TorusMetric(spec, modes=[FourierMode(wave, amplitude)])


# 差分模板

def test_periodic_derivatives_of_sine_are_fourth_order_accurate() -> None:
    size = 64
    h = 2.0 * math.pi / size
    x = np.arange(size) * h
    assert np.max(np.abs(derivative(np.sin(x), 1, h) - np.cos(x))) < 1e-5
    assert np.max(np.abs(derivative(np.sin(x), 2, h) + np.sin(x))) < 1e-5


def test_derivative_matrix_matches_stencil() -> None:
    size = 32
    h = 0.1
    values = np.random.default_rng(0).standard_normal(size)
    D = derivative_matrix(size, 2, h)
    assert np.allclose(D @ values, derivative(values, 2, h))


def test_stencil_rejects_bad_requests() -> None:
    values = np.zeros(16)
    with pytest.raises(StencilError):
        derivative(values, 1, 0.1, mode="nearest")
    with pytest.raises(StencilError):
        derivative(values, 7, 0.1)
    with pytest.raises(StencilError):
        derivative(np.zeros(3), 1, 0.1)


# 闭式曲率

def test_flat_torus_curvature_vanishes(flat2, torus2) -> None:
    atlas = torus_atlas(torus2, 4)
    curv = curvature_field(flat2, atlas.points)
    assert np.max(np.abs(curv.R)) < 1e-10
    assert np.max(np.abs(curv.ric)) < 1e-10
    assert sup_rm_norm(curv) < 1e-10
    assert np.max(np.abs(hsc(curv, [1.0, 1j]))) < 1e-10


def test_fubini_study_has_constant_holomorphic_curvature(fs1, cp1_atlas) -> None:
    curv = curvature_field(fs1, cp1_atlas.points)
    assert np.allclose(hsc(curv, [1.0]), 2.0, atol=1e-10)
    assert np.allclose(curv.ric, 2.0 * curv.G, atol=1e-10)


def test_fubini_study_cp2_is_einstein(fs2) -> None:
    atlas = projective_atlas(2, nodes=6)
    curv = curvature_field(fs2, atlas.points)
    assert np.allclose(curv.ric, 3.0 * curv.G, atol=1e-10)
    assert np.allclose(curv.S, 6.0, atol=1e-10)
    rng = np.random.default_rng(3)
    for _ in range(4):
        xi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert np.allclose(hsc(curv, xi), 2.0, atol=1e-10)


def test_scaling_the_metric_scales_curvature(fs1) -> None:
    curv = curvature_tensor(ScaledMetric(fs1, 2.0), [0.3 - 0.2j])
    assert hsc(curv, [1.0])[0] == pytest.approx(1.0, abs=1e-10)
    assert RadialMetric(1, scale=2.0).kahler_class()[0] == pytest.approx(4.0 * math.pi)


def test_curvature_tensor_has_kahler_symmetries(torus2) -> None:
    curv = curvature_field(_wavy_torus(torus2), torus_atlas(torus2, 4).points)
    report = kahler_symmetry_check(curv)
    assert report.passed
    assert np.max(np.abs(curv.R)) > 0.0


def test_zero_direction_is_rejected(fs1) -> None:
    curv = curvature_tensor(fs1, [0.0])
    with pytest.raises(InvalidInputError):
        hsc(curv, [0.0])


def test_degenerate_torus_metric_raises(torus2) -> None:
    metric = _wavy_torus(torus2, amplitude=0.2)
    with pytest.raises(DegenerateMetricError):
        curvature_tensor(metric, [0.0, 0.0])


def test_grid_metric_is_hermitian_and_skew_entries_are_rejected() -> None:
    spec = torus_spec(2)
    tube = TubeAnsatz(spec, _wavy_torus(spec), grid=16)
    G, _, _ = tube.jet(0.0, tube.initial_state())
    assert np.all(check_positive(G, tube.points) > 0)
    skewed = G.copy()
    skewed[:, 0, 1] += 1e-9
    with pytest.raises(DegenerateMetricError, match="Hermitian"):
        check_positive(skewed, tube.points)


def test_hsc_is_invariant_under_complex_rescaling(torus2) -> None:
    curv = curvature_tensor(_wavy_torus(torus2), [0.1 + 0.2j, 0.3j])
    xi = np.array([0.7 - 0.2j, 0.4 + 1.1j])
    base = hsc(curv, xi)
    for lam in (2.5, -1.0, 0.3j, 1.0 + 2.0j):
        assert hsc(curv, lam * xi) == pytest.approx(base, rel=1e-12, abs=1e-14)


def test_finite_difference_curvature_converges_at_fourth_order(fs1) -> None:
    result = fd_convergence_order(fs1)
    assert result["order"] > 3.5
    assert result["errors"][-1] < result["errors"][0]


# sup H 搜索

def test_sup_hsc_recovers_fubini_study_value(fs2) -> None:
    estimate = sup_hsc(fs2, projective_atlas(2, nodes=4), restarts=2, seed=1)
    assert estimate.value == pytest.approx(2.0, abs=1e-6)
    assert estimate.per_point.shape == (estimate.samples,)


def test_quartic_ascent_tolerates_a_zero_warm_start(fs2) -> None:
    curv = curvature_field(fs2, projective_atlas(2, nodes=3).points)
    warm = np.zeros((curv.size, 2), dtype=complex)
    with np.errstate(divide="raise", invalid="raise"):
        values, directions, starts = maximize_quartic(frame_tensor(curv), restarts=1, warm=warm)
    assert starts == 4
    assert values == pytest.approx(2.0, rel=1e-8)
    assert np.linalg.norm(directions, axis=-1) == pytest.approx(1.0)


def test_sup_hsc_on_flat_torus_is_zero(flat2, torus2) -> None:
    assert abs(sup_hsc(flat2, torus_atlas(torus2, 4)).value) < 1e-10


def test_sup_hsc_does_not_decrease_with_restarts(torus2) -> None:
    metric = _wavy_torus(torus2, amplitude=0.03)
    atlas = torus_atlas(torus2, 4)
    few = sup_hsc(metric, atlas, restarts=1, seed=7).value
    many = sup_hsc(metric, atlas, restarts=4, seed=7).value
    assert many >= few - 1e-12


# 曲率界

def test_royden_bound_is_sharp_for_fubini_study(fs1, cp1_atlas) -> None:
    curv = curvature_field(fs1, cp1_atlas.points)
    report = royden_bound_check(curv, fs1, A=2.0)
    assert report.passed
    assert abs(report.slack) < 1e-8


def test_royden_bound_on_flat_torus_has_slack_n_squared(flat2, torus2) -> None:
    curv = curvature_field(flat2, torus_atlas(torus2, 4).points)
    report = royden_bound_check(curv, flat2, A=1.0)
    assert report.passed
    assert report.slack == pytest.approx(4.0)


def test_royden_bound_below_measured_sup_is_an_error(fs1, cp1_atlas) -> None:
    curv = curvature_field(fs1, cp1_atlas.points)
    report = royden_bound_check(curv, fs1, A=1.5)
    assert not report.passed
    assert report.slack == pytest.approx(-0.5, abs=1e-6)


def test_refined_royden_bound_with_adapted_frames(fs2) -> None:
    curv = curvature_field(fs2, projective_atlas(2, nodes=4).points)
    frame = simultaneous_frame(curv.G, curv.G)
    report = royden_refined_check(curv, frame, 2.0, curv.G)
    assert report.passed
    assert abs(report.slack) < 1e-8


def test_royden_bounds_hold_for_random_reference_metrics(torus2) -> None:
    rng = np.random.default_rng(11)
    size = 1000
    points = rng.uniform(0.0, 1.0, (size, 2)) + 1j * rng.uniform(0.0, 1.0, (size, 2))
    curv = curvature_field(_wavy_torus(torus2, amplitude=0.03), points)
    measured = estimate_from_curvature(curv, restarts=4, seed=11).value
    A = abs(measured) * 1.01 + 1e-6

    M = rng.standard_normal((size, 2, 2)) + 1j * rng.standard_normal((size, 2, 2))
    G_hat = M @ np.conj(np.swapaxes(M, -1, -2)) + 0.1 * np.eye(2)
    refined = royden_refined_check(curv, simultaneous_frame(G_hat, curv.G), A, G_hat)
    assert refined.passed
    assert refined.slack >= -1e-8

    other = TorusMetric(torus2, modes=[FourierMode(dual_wave(torus2, [0, 0, 1, 0]), 0.03)])
    report = royden_bound_check(curv, ScaledMetric(other, 0.5), A, measured_sup=measured)
    assert report.passed
    assert report.slack >= -1e-8


def test_refined_royden_rejects_frames_that_are_not_orthonormal(fs2) -> None:
    curv = curvature_tensor(fs2, [0.0, 0.0])
    frame = 2.0 * np.eye(2, dtype=complex)[None]
    report = royden_refined_check(curv, frame, 2.0, curv.G)
    assert not report.passed


def test_berger_identity_on_perturbed_cp2() -> None:
    metric = RadialMetric(2, perturbation=[0.1, -0.05])
    curv = curvature_tensor(metric, [0.4 + 0.1j, -0.2j])
    report = berger_identity_check(curv)
    assert report.passed
    assert report.measured["relative_error"] < 1e-3


def test_berger_residual_converges_under_direction_refinement(torus2) -> None:
    curv = curvature_tensor(_wavy_torus(torus2), [0.1 + 0.05j, 0.2])
    errors = np.array([
        berger_identity_check(curv, resolution=(m, 8)).measured["relative_error"] for m in (4, 8, 16)
    ])
    assert errors[0] > 1e-8
    orders = np.log2(errors[:-1] / errors[1:])
    assert np.all(orders >= 1.0)
    fine = berger_identity_check(curv, resolution=(64, 64))
    assert fine.passed


def test_berger_identity_needs_two_dimensions(fs1) -> None:
    with pytest.raises(InvalidInputError):
        berger_identity_check(curvature_tensor(fs1, [0.0]))


def test_product_bound_is_sum_of_factor_bounds(fs1) -> None:
    atlas = projective_atlas(1, nodes=6)
    report = product_hsc_check(fs1, fs1, 2.0, 2.0, atlas, atlas, restarts=1)
    assert report.passed
    assert report.measured["sup_H"] == pytest.approx(2.0, abs=1e-6)


def test_rational_curve_lower_bound_on_cp1(cp1, fs1, cp1_atlas) -> None:
    report = rational_curve_bound_check(cp1, fs1, cp1_atlas)
    assert report.passed
    assert report.measured["curve_area"] == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_rational_curve_needs_a_projective_factor(torus2, flat2) -> None:
    with pytest.raises(InvalidInputError):
        rational_curve_bound_check(torus2, flat2, build_atlas(torus2, {"torus_grid": 4}))
