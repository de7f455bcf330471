from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import kdv_soliton
from apps.collisionlab.fitting import FrameFit, SolitonFit
from apps.collisionlab.monotonicity import (
    COMBINATIONS,
    allowance_rates,
    frame_quantities,
    monotonicity_diagnostics,
    psi,
)
from shared.spectral.pde_integrator import FieldState

SPEEDS = (1.0, 0.25)
RHO = (10.0, -20.0)


def _frame(kdv, t: float, eta_fn=None):
    def remainder(x):
        return np.zeros_like(x) if eta_fn is None else eta_fn(x)

    state = FieldState.from_function(
        kdv,
        200.0,
        1024,
        lambda x: kdv_soliton(SPEEDS[0], x - RHO[0])
        + kdv_soliton(SPEEDS[1], x - RHO[1])
        + remainder(x),
        t=t,
    )
    fits = tuple(
        SolitonFit(c=c, rho=rho, peak=rho, window=(rho - 5.0, rho + 5.0))
        for c, rho in zip(SPEEDS, RHO)
    )
    fit = FrameFit(
        t=t,
        fits=fits,
        eta=remainder(state.x),
        eta_h1=0.0,
        orthogonality=(0.0,) * 4,
        refined=False,
    )
    return state, fit


def test_psi_shape():
    assert psi(0.0) == pytest.approx(0.5)
    assert psi(-60.0) == pytest.approx(1.0)
    assert psi(60.0) == pytest.approx(0.0, abs=1e-6)
    samples = psi(np.linspace(-20.0, 20.0, 41))
    assert np.all(np.diff(samples) < 0.0)


def test_zero_remainder_has_no_local_mass(kdv):
    state, fit = _frame(kdv, 10.0)
    quantities = frame_quantities(state, fit, SPEEDS, t0=10.0, x0=0.0)
    assert quantities.masses == (0.0, 0.0)
    assert quantities.energies == pytest.approx((0.0, 0.0), abs=1e-14)
    assert quantities.g == (0.0, 0.0)
    assert quantities.profile_mass[0] == pytest.approx(6.0, rel=1e-8)


def test_remainder_behind_the_waves_is_counted(kdv):
    epsilon = 1e-3

    def bump(x):
        return epsilon * np.exp(-((x + 50.0) ** 2))

    state, fit = _frame(kdv, 10.0, bump)
    quantities = frame_quantities(state, fit, SPEEDS, t0=10.0, x0=0.0)
    assert quantities.masses[0] == pytest.approx(epsilon**2 * math.sqrt(math.pi / 2.0), rel=1e-4)
    assert quantities.masses[1] < quantities.masses[0]


def test_remainder_ahead_of_the_waves_is_ignored(kdv):
    state, fit = _frame(kdv, 10.0, lambda x: 1e-3 * np.exp(-((x - 60.0) ** 2)))
    quantities = frame_quantities(state, fit, SPEEDS, t0=10.0, x0=0.0)
    assert quantities.masses[0] < 1e-10


def test_constant_frames_give_zero_constants(kdv):
    frames = [_frame(kdv, t) for t in (10.0, 20.0, 30.0)]
    series = monotonicity_diagnostics(frames, SPEEDS, interaction_time=50.0)
    assert series.times == [10.0, 20.0, 30.0]
    assert all(series.constants[name] == 0.0 for name in COMBINATIONS)
    assert all(series.passes(1.0).values())
    assert all(len(row) == 1 + len(COMBINATIONS) for row in series.rows())
    assert all(budget > 0.0 for budget in series.allowances["J1"])


def test_no_frames_gives_empty_series():
    series = monotonicity_diagnostics([], SPEEDS, interaction_time=50.0)
    assert series.times == []
    assert series.constants == {}
    assert all(series.passes(0.0).values())


def test_allowances_decay_in_time(kdv):
    early = frame_quantities(*_frame(kdv, 10.0), SPEEDS, t0=10.0, x0=2.5)
    late = frame_quantities(*_frame(kdv, 200.0), SPEEDS, t0=10.0, x0=2.5)
    early_rates = allowance_rates(early, SPEEDS, 10.0, 2.5, 50.0)
    late_rates = allowance_rates(late, SPEEDS, 10.0, 2.5, 50.0)
    assert all(late_rates[name] < early_rates[name] for name in COMBINATIONS)
