from __future__ import annotations

import math

import numpy as np
import pytest

from errors import InvalidInputError, PreconditionError
from flows.ansatz import RadialAnsatz, TubeAnsatz, sine_weights
from flows.krf import run_krf, run_normalized_krf
from flows.monitors import (
    blowup_rate_check, cohomology_consistency, existence_bound_check, flow_functional_monitor,
    trace_bound_monitor, trace_evolution_check,
)
from data.scenarios import load_trajectory
from geometry.metrics import FourierMode, RadialMetric, TorusMetric, dual_wave
from manifolds.spec import torus_spec


@pytest.fixture(scope="module")
def fs_flow():
    return run_krf(RadialAnsatz(1, grid=128), horizon=0.6, snapshots=60)


def _wavy_tube(grid: int = 64) -> TubeAnsatz:
    spec = torus_spec(1)
    metric = TorusMetric(spec, modes=[FourierMode(dual_wave(spec, [1, 0]), 0.02)])
    return TubeAnsatz(spec, metric, grid=grid)


def test_sine_weights_integrate_sin_exactly() -> None:
    w = sine_weights(32)
    theta = (np.arange(32) + 0.5) * math.pi / 32
    assert np.sum(w * np.sin(theta)) == pytest.approx(2.0, rel=1e-12)
    assert np.sum(w * np.sin(2 * theta)) == pytest.approx(0.0, abs=1e-12)


def test_tube_ansatz_rejects_skew_lattice() -> None:
    spec = torus_spec(1, periods=[(1.0, 0.5 + 1j)])
    with pytest.raises(InvalidInputError):
        TubeAnsatz(spec)


@pytest.mark.slow
def test_fubini_study_collapses_at_half(fs_flow) -> None:
    assert fs_flow.singular
    assert fs_flow.trigger == "eigenvalue_floor"
    assert fs_flow.T_num == pytest.approx(0.5, rel=1e-2)
    assert (fs_flow.times < fs_flow.T_num).all()


@pytest.mark.slow
def test_fubini_study_flow_monitors(fs_flow) -> None:
    assert existence_bound_check(fs_flow, A=2.0).passed
    assert trace_bound_monitor(fs_flow, A=2.0).passed
    assert cohomology_consistency(fs_flow).passed
    assert trace_evolution_check(fs_flow, A=2.0).passed


@pytest.mark.slow
def test_fubini_study_blowup_product_is_one(fs_flow) -> None:
    report = blowup_rate_check(fs_flow)
    assert report.passed
    assert report.measured["min_product"] == pytest.approx(1.0, rel=2e-2)


@pytest.mark.slow
def test_scaled_fubini_study_collapses_at_one() -> None:
    traj = run_krf(RadialAnsatz(1, RadialMetric(1, scale=2.0), grid=128), horizon=1.5, snapshots=30)
    assert traj.singular
    assert traj.T_num == pytest.approx(1.0, rel=1e-2)
    assert existence_bound_check(traj, A=1.0).passed


@pytest.mark.slow
def test_singular_time_is_stable_under_step_refinement() -> None:
    coarse = run_krf(RadialAnsatz(1, grid=128), horizon=0.6, snapshots=30, max_step=0.02)
    fine = run_krf(RadialAnsatz(1, grid=128), horizon=0.6, snapshots=30, max_step=0.01)
    assert coarse.singular and fine.singular
    assert abs(fine.T_num - coarse.T_num) / fine.T_num < 5e-3


@pytest.mark.slow
def test_perturbed_fubini_study_blowup_rate() -> None:
    initial = RadialMetric(1, perturbation=[0.2])
    traj = run_krf(RadialAnsatz(1, initial, grid=128), horizon=0.6, snapshots=60)
    assert traj.singular
    assert traj.T_num == pytest.approx(0.5, rel=2e-2)
    report = blowup_rate_check(traj)
    assert report.passed
    assert report.measured["min_product"] >= 0.98


def test_existence_bound_needs_positive_A(scenario_dir) -> None:
    traj = load_trajectory(scenario_dir / "negative" / "blowup_fabricated.csv", T_num=0.5, n=1)
    assert not existence_bound_check(traj, A=0.0).passed


@pytest.mark.slow
def test_perturbed_torus_flow_is_immortal() -> None:
    traj = run_krf(_wavy_tube(), horizon=0.5, snapshots=100)
    assert not traj.singular
    assert traj.T_num == pytest.approx(0.5)
    assert cohomology_consistency(traj).passed
    sup_H = traj.column("sup_H")
    assert abs(sup_H[-1]) <= abs(sup_H[0]) + 1e-12
    with pytest.raises(PreconditionError):
        blowup_rate_check(traj)


@pytest.mark.slow
def test_normalized_torus_flow_identity() -> None:
    traj = run_normalized_krf(_wavy_tube(grid=256), horizon=1.0, snapshots=21)
    assert traj.normalized
    vol = traj.column("vol")
    assert vol[-1] == pytest.approx(vol[0] * math.exp(-1.0), rel=1e-4)
    assert cohomology_consistency(traj).passed
    reports = flow_functional_monitor(traj, nu=0)
    assert reports[0].name == "flow_identity"
    assert all(r.passed for r in reports)


def test_functional_monitor_needs_normalized_flow(scenario_dir) -> None:
    traj = load_trajectory(scenario_dir / "negative" / "blowup_fabricated.csv", T_num=0.5, n=1)
    with pytest.raises(InvalidInputError):
        flow_functional_monitor(traj)


def test_functional_monitor_needs_three_snapshots() -> None:
    traj = run_normalized_krf(_wavy_tube(grid=32), horizon=0.1, snapshots=1)
    assert len(traj.frame) == 2
    with pytest.raises(InvalidInputError):
        flow_functional_monitor(traj)


def test_fabricated_trajectory_fails_blowup_rate(scenario_dir) -> None:
    traj = load_trajectory(scenario_dir / "negative" / "blowup_fabricated.csv", T_num=0.5, n=1)
    assert traj.singular
    report = blowup_rate_check(traj)
    assert not report.passed
    assert report.measured["min_product"] == pytest.approx(0.9)
