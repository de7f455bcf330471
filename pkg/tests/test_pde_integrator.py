from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from conftest import kdv_soliton
from shared.solitons.errors import BlowupDetected
from shared.spectral.pde_integrator import (
    ConservationTracker,
    FieldState,
    SnapshotRecorder,
    Sponge,
    calibrate_time_step,
    exact_phase_shifts_p2,
    exact_two_soliton_speeds,
    interaction_coefficient,
    linear_propagate,
    manifest,
    run,
    run_backward,
    suggest_time_step,
)


def test_mode_count_must_be_power_of_two(kdv):
    with pytest.raises(ValueError, match="power of two"):
        FieldState(model=kdv, length=10.0, u=np.zeros(100))


def test_soliton_is_stationary_in_its_frame(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x), frame_speed=1.0)
    tracker = ConservationTracker()
    result = run(state, 5.0, 0.01, observers=[tracker], stride=50)
    assert result.state.t == pytest.approx(5.0)
    assert np.max(np.abs(result.state.u - state.u)) < 1e-5
    drift = tracker.drift()
    assert drift["mass"] < 1e-7
    assert drift["energy"] < 1e-6
    assert len(result.records["conservation"]) == 1 + 500 // 50


def test_soliton_travels_at_its_speed(field_state):
    state = field_state(lambda x: kdv_soliton(0.5, x + 5.0))
    result = run(state, 4.0, 0.01)
    assert np.max(np.abs(result.state.u - kdv_soliton(0.5, state.x + 3.0))) < 1e-5


def test_direction_and_step_are_checked(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x))
    with pytest.raises(ValueError):
        run(state, -1.0, 0.01)
    with pytest.raises(ValueError):
        run_backward(state, 1.0, 0.01)
    with pytest.raises(ValueError, match="dt"):
        run(state, 1.0, 0.0)


def test_blowup_ceiling(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x))
    with pytest.raises(BlowupDetected):
        run(state, 1.0, 0.01, ceiling=0.1)


def test_backward_run_matches_reflected_forward_run(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x) + 0.3 * np.exp(-(x**2) / 4.0))
    forward = run(state, 1.0, 0.01).state
    backward = run_backward(state, -1.0, 0.01).state
    assert backward.t == pytest.approx(-1.0)
    assert np.allclose(backward.u, forward.reflected().u, atol=1e-9)


def test_reflection_maps_the_grid_onto_itself(field_state):
    state = field_state(lambda x: np.exp(-((x - 3.0) ** 2)))
    assert np.allclose(state.reflected().u, np.exp(-((state.x + 3.0) ** 2)))


def test_linear_propagation_conserves_mass(field_state):
    state = field_state(lambda x: np.exp(-(x**2)))
    moved = linear_propagate(state, 2.0)
    assert moved.t == 2.0
    assert moved.mass() == pytest.approx(state.mass(), rel=1e-12)


def test_sponge_damps_outgoing_mass(field_state):
    sponge = Sponge(strength=2.0, width=10.0)
    state = field_state(lambda x: kdv_soliton(1.0, x - 25.0), sponge=sponge)
    assert run(state, 10.0, 0.01).state.mass() < 0.5 * state.mass()


def test_exact_two_soliton_mass():
    x = np.linspace(-100.0, 100.0, 20001)
    for t in (-20.0, 0.0, 15.0):
        u = exact_two_soliton_speeds(1.0, 0.25, t, x)
        assert trapezoid(u * u, x) == pytest.approx(6.0 + 6.0 * 0.25**1.5, rel=1e-9)


def test_exact_two_soliton_separates_into_solitons():
    x = np.linspace(-100.0, 100.0, 4001)
    u = exact_two_soliton_speeds(1.0, 0.25, -60.0, x)
    assert np.max(u) == pytest.approx(1.5, rel=1e-3)
    assert np.max(u[x > -40.0]) == pytest.approx(0.375, rel=1e-3)


def test_integrator_follows_the_exact_solution(kdv):
    t0 = -20.0
    state = FieldState.from_function(
        kdv, 200.0, 1024, lambda x: exact_two_soliton_speeds(1.0, 0.25, t0, x), t=t0
    )
    result = run(state, 0.0, 0.01)
    exact = exact_two_soliton_speeds(1.0, 0.25, 0.0, state.x)
    assert np.max(np.abs(result.state.u - exact)) < 1e-5


def test_exact_phase_shifts():
    assert interaction_coefficient(1.0, 0.25) == pytest.approx(1.0 / 9.0)
    fast, slow = exact_phase_shifts_p2(1.0, 0.25)
    assert fast == pytest.approx(math.log(9.0))
    assert slow == pytest.approx(-2.0 * math.log(9.0))
    with pytest.raises(ValueError):
        exact_phase_shifts_p2(0.25, 1.0)


def test_time_step_helpers(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x))
    assert 0.0 < suggest_time_step(state) <= 0.5 * state.dx
    calibrated = calibrate_time_step(state, 0.5, 0.05, tolerance=1e-6)
    assert calibrated.dt == pytest.approx(0.05 * 0.5**calibrated.halvings)


def test_snapshots_and_manifest(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x))
    recorder = SnapshotRecorder()
    run(state, 0.1, 0.01, observers=[recorder], stride=5)
    assert [t for t, _ in recorder.frames] == pytest.approx([0.0, 0.05, 0.1])
    info = manifest(state, 0.01)
    assert set(info) == {"N", "L_dom", "dt", "scheme", "frame_speed", "sponge", "model"}
    assert info["N"] == 512
