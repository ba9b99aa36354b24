from __future__ import annotations

import numpy as np
import pytest

from errors import InfeasibleError, InvalidInputError
from continuity.families import my_family_construct
from continuity.wu_yau import (
    continuity_class, newton_convergence, solution_check, trace_estimate_check, wu_yau_continuation, wu_yau_solve,
)
from geometry.metrics import FourierMode, RadialMetric, TorusMetric, dual_wave
from manifolds.spec import torus_spec


def test_continuity_class_on_cp1(cp1, fs1) -> None:
    cls = continuity_class(cp1, fs1, 3.0)
    assert cls.as_float()[0] == pytest.approx(2.0 * np.pi)


def test_fubini_study_continuation_is_a_multiple_of_the_reference(fs1) -> None:
    solutions = wu_yau_continuation(fs1, [2.5, 5.0, 3.0])
    assert [s.t for s in solutions] == [5.0, 3.0, 2.5]
    for solution in solutions:
        assert solution_check(solution).passed
        lo, hi = solution.eig_range
        assert lo == pytest.approx(solution.t - 2.0, rel=1e-6)
        assert hi == pytest.approx(solution.t - 2.0, rel=1e-6)
        assert np.max(solution.trace) == pytest.approx(1.0 / (solution.t - 2.0), rel=1e-6)
        assert solution.residuals[-1] <= 1e-6


def test_continuity_below_the_kahler_threshold_is_infeasible(fs1) -> None:
    with pytest.raises(InfeasibleError):
        wu_yau_solve(fs1, 1.5)


def test_continuity_parameter_must_be_positive(flat2) -> None:
    with pytest.raises(InvalidInputError):
        wu_yau_solve(flat2, 0.0, grid=8)


def test_trace_estimates_on_cp1(fs1) -> None:
    for eps in (0.1, 0.01):
        t = 1 * 2.0 + 2 * 1 * eps
        report = trace_estimate_check(wu_yau_solve(fs1, t), mu=2.0, eps=eps)
        assert report.passed
        assert report.measured["max_trace"] == pytest.approx(1.0 / (2.0 * eps), rel=1e-6)


def test_trace_estimate_rejects_mismatched_parameter(fs1) -> None:
    report = trace_estimate_check(wu_yau_solve(fs1, 3.0), mu=2.0, eps=0.1)
    assert not report.passed
    assert report.level.value == "error"


def test_trace_estimate_flags_violated_precondition(fs1) -> None:
    # t = mu + 2 eps = 3 while sup H(w_ref) = 2 > mu + eps
    report = trace_estimate_check(wu_yau_solve(fs1, 3.0), mu=0.6, eps=1.2)
    assert not report.passed
    assert "precondition" in report.message


def test_flat_torus_solution_is_scaled_reference(flat2) -> None:
    solution = wu_yau_solve(flat2, 0.5, grid=16)
    assert solution_check(solution).passed
    assert solution.eig_range[0] == pytest.approx(0.5, rel=1e-8)
    assert solution.volume == pytest.approx(solution.expected_volume, rel=1e-8)


def test_perturbed_torus_solution_is_certified() -> None:
    spec = torus_spec(1)
    reference = TorusMetric(spec, modes=[FourierMode(dual_wave(spec, [1, 0]), 0.02)])
    solution = wu_yau_solve(reference, 1.0, grid=64)
    report = solution_check(solution)
    assert report.passed
    assert report.measured["class_gap"] <= 1e-4
    assert report.measured["newton_quadratic"]


def test_perturbed_fubini_study_solution_converges_quadratically() -> None:
    solution = wu_yau_solve(RadialMetric(1, perturbation=[0.2]), 5.0)
    report = solution_check(solution)
    assert report.passed
    assert report.measured["newton_quadratic"]
    assert len(solution.damping) >= 1


def test_newton_ratio_accepts_quadratic_residuals() -> None:
    result = newton_convergence([8.8e-4, 1.3e-6, 4.9e-12], [1.0, 1.0])
    assert result["quadratic"]
    assert result["worst_ratio"] == pytest.approx(1.3e-6 / 8.8e-4 ** 2)
    assert result["order"] is None
    assert result["undamped_steps"] == 2


def test_newton_ratio_rejects_linear_convergence() -> None:
    result = newton_convergence([1e-2, 1e-3, 1e-4, 1e-5, 1e-6], [1.0] * 4)
    assert not result["quadratic"]
    assert result["order"] == pytest.approx(1.0)


def test_newton_ratio_ignores_damped_steps() -> None:
    result = newton_convergence([1.0, 0.9, 0.5, 0.1], [0.25, 0.5, 0.5])
    assert result["quadratic"]
    assert result["worst_ratio"] is None
    assert result["undamped_steps"] == 0


@pytest.mark.parametrize("eps", [0.05, 0.025])
def test_family_case_one_on_flat_torus(flat2, eps: float) -> None:
    solution, report = my_family_construct(flat2, eps=eps, case=1, grid=16)
    assert solution is not None
    assert solution.t == pytest.approx(4 * eps)
    assert report.passed
    assert report.measured["bound_applies"]
    assert report.measured["ric_plus_omega_sq_int"] == pytest.approx(2.0 * report.measured["volume"], rel=1e-6)


def test_family_case_one_is_inapplicable_on_cp1(fs1) -> None:
    solution, report = my_family_construct(fs1, eps=0.1, case=1)
    assert solution is None
    assert not report.passed
    assert "inapplicable" in report.message


def test_family_case_two_on_cp1(fs1) -> None:
    solution, report = my_family_construct(fs1, case=2, mu=2.0)
    assert solution.t == pytest.approx(6.0)
    assert report.passed
    assert report.measured["ric_plus_omega_sq_int"] == pytest.approx(2.25 * report.measured["volume"], rel=1e-5)


def test_family_rejects_unknown_case(fs1) -> None:
    with pytest.raises(InvalidInputError):
        my_family_construct(fs1, eps=0.1, case=3)
