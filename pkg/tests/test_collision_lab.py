from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import kdv_soliton
from apps.collisionlab.certificates import residual_certificates
from apps.collisionlab.collision_lab import (
    CollisionConfig,
    ModulationTrack,
    _ModulationObserver,
    bookkeeping_closure,
    half_space_cutoff,
    initial_state,
    interaction_time,
    late_residual,
    run_collision,
    symmetric_run,
)
from apps.collisionlab.config import parse_config
from apps.collisionlab.fitting import FrameFit, SolitonFit
from shared.solitons.errors import ConfigError, WindowContaminated
from shared.solitons.nonlinearity import pure_power
from shared.spectral.pde_integrator import ConservationTracker, exact_phase_shifts_p2


def _fit(t: float, rho: float = 0.0, worst: float = 0.0) -> FrameFit:
    fits = (
        SolitonFit(c=1.0, rho=rho + 30.0, peak=rho + 30.0, window=(rho + 22.0, rho + 38.0)),
        SolitonFit(c=0.25, rho=rho, peak=rho, window=(rho - 16.0, rho + 16.0)),
    )
    return FrameFit(
        t=t,
        fits=fits,
        eta=np.zeros(4),
        eta_h1=0.0,
        orthogonality=(worst, -2.0 * worst, 0.0, 0.0),
        refined=False,
    )


def test_interaction_time():
    assert interaction_time(1.0, 0.01) == pytest.approx(0.01**-0.51)
    # T_{c1,c2} = c1^{-3/2} T_{c2/c1}
    assert interaction_time(4.0, 0.04) == pytest.approx(0.125 * 0.01**-0.51)


@pytest.mark.parametrize(
    "overrides, message",
    [
        ({"c2": 1.5}, "0 < c2 < c1"),
        ({"initial": "random"}, "unknown initial"),
        ({"initial": "exact", "model": pure_power(3)}, "pure p = 2"),
        ({"sign": -1}, "requires p = 3"),
        ({"separation": 5.0}, "below"),
    ],
)
def test_invalid_collision_configs(overrides, message):
    values = {"model": pure_power(2), "c1": 1.0, "c2": 0.25, **overrides}
    with pytest.raises(ConfigError, match=message):
        CollisionConfig(**values)


def test_derived_geometry(kdv):
    config = CollisionConfig(model=kdv, c1=1.0, c2=0.25, initial="bare")
    assert config.min_separation == pytest.approx(40.0)
    assert config.start_time > config.pre_window_time
    assert config.end_time == config.start_time
    assert config.modes & (config.modes - 1) == 0
    assert config.domain_length / config.modes <= config.grid_spacing
    json.dumps(config.describe())


def test_from_experiment(experiment_factory):
    experiment = experiment_factory(
        collision={"initial": "exact", "refine": True},
        integrator={"sponge_strength": 0.5, "stride": 4},
        grid={"n_modes": 8192},
    )
    config = CollisionConfig.from_experiment(experiment, verify=True)
    assert config.initial == "exact"
    assert config.refine
    assert config.stride == 4
    assert config.sponge.strength == 0.5
    assert config.modes == 8192
    assert config.calibrate


def test_bare_initial_state(kdv):
    config = CollisionConfig(model=kdv, c1=1.0, c2=0.25, initial="bare")
    state = initial_state(config)
    assert state.t == pytest.approx(-config.start_time)
    assert state.frame_speed == 0.25
    assert state.mass() == pytest.approx(6.0 + 6.0 * 0.25**1.5, rel=1e-8)


def test_track_skips_duplicates_and_sorts():
    track = ModulationTrack()
    assert track.append("post", _fit(20.0), offset=5.0)
    assert track.append("pre", _fit(-20.0, worst=1e-9), offset=-5.0)
    assert not track.append("post", _fit(20.0), offset=5.0)

    ordered = track.sorted()

    assert ordered.times == [-20.0, 20.0]
    assert ordered.phases == ["pre", "post"]
    assert ordered.rho2 == [-5.0, 5.0]
    assert ordered.orthogonality[0] == pytest.approx(2e-9)
    assert len(ordered.rows()[0]) == 8
    assert ordered.phase("post")["c1"].tolist() == [1.0]


def test_half_space_cutoff_limits(field_state):
    state = field_state(lambda x: np.zeros_like(x), t=0.0)
    chi = half_space_cutoff(state, 0.25)
    assert chi[0] == pytest.approx(0.0, abs=1e-12)
    assert chi[-1] == pytest.approx(1.0)
    assert chi[state.n // 2] == pytest.approx(0.5)


def test_late_residual_of_clean_frame(field_state):
    state = field_state(lambda x: kdv_soliton(1.0, x), t=50.0)
    fit = FrameFit(
        t=50.0,
        fits=_fit(50.0).fits,
        eta=np.zeros(state.n),
        eta_h1=0.0,
        orthogonality=(0.0,) * 4,
        refined=False,
    )
    late = late_residual(state, fit, 0.25)
    assert late.mass == 0.0
    assert late.energy == 0.0
    assert late.h1 == 0.0


def _fast_wave_fit(state, c1: float, eta: np.ndarray) -> FrameFit:
    fits = (
        SolitonFit(c=c1, rho=0.0, peak=0.0, window=(-8.0, 8.0)),
        SolitonFit(c=0.25, rho=-60.0, peak=-60.0, window=(-76.0, -44.0)),
    )
    return FrameFit(
        t=state.t, fits=fits, eta=eta, eta_h1=0.0, orthogonality=(0.0,) * 4, refined=False
    )


@pytest.mark.parametrize("c1", [1.0, 2.0, 4.0])
def test_contamination_check_ignores_the_fast_wave_tail(kdv, field_state, c1):
    state = field_state(lambda x: kdv_soliton(c1, x), length=200.0, n=4096, t=10.0)
    config = CollisionConfig(model=kdv, c1=c1, c2=0.25, initial="bare")
    observer = _ModulationObserver(config, ModulationTrack(), keep_every=1)

    # remainder taken as the whole field: the fast wave's own tail is all there is
    observer._check_contamination(state, _fast_wave_fit(state, c1, state.u))
    observer._check_contamination(state, _fast_wave_fit(state, c1, np.zeros(state.n)))


@pytest.mark.parametrize("c1", [2.0, 4.0])
def test_contamination_check_flags_radiation_ahead(kdv, field_state, c1):
    bump = lambda x: 1e-7 * c1 * np.exp(-((x - 60.0) ** 2))  # noqa: E731
    state = field_state(lambda x: kdv_soliton(c1, x) + bump(x), length=200.0, n=4096, t=10.0)
    config = CollisionConfig(model=kdv, c1=c1, c2=0.25, initial="bare")
    observer = _ModulationObserver(config, ModulationTrack(), keep_every=1)

    with pytest.raises(WindowContaminated, match="ahead of the fast wave"):
        observer._check_contamination(state, _fast_wave_fit(state, c1, bump(state.x)))


def _two_waves(x):
    return kdv_soliton(1.0, x) + kdv_soliton(0.25, x + 60.0)


def test_bookkeeping_closes_for_unchanged_waves(kdv, field_state):
    state = field_state(_two_waves, length=200.0, n=4096, t=10.0)
    config = CollisionConfig(model=kdv, c1=1.0, c2=0.25, initial="bare")
    conservation = ConservationTracker()
    conservation(state)
    frame = (state, _fast_wave_fit(state, 1.0, np.zeros(state.n)))

    closure = bookkeeping_closure(config, frame, (0.0, 0.0), conservation)

    assert closure["mass"] < 1e-10
    assert closure["mass_tolerance"] < 1e-8
    assert closure["energy"] < 1e-10


def test_unrecorded_mass_breaks_the_closure(kdv, field_state):
    bump = lambda x: 1e-3 * np.exp(-((x - 30.0) ** 2))  # noqa: E731
    clean = field_state(_two_waves, length=200.0, n=4096, t=10.0)
    state = field_state(lambda x: _two_waves(x) + bump(x), length=200.0, n=4096, t=10.0)
    config = CollisionConfig(model=kdv, c1=1.0, c2=0.25, initial="bare")
    conservation = ConservationTracker()
    conservation(clean)
    frame = (state, _fast_wave_fit(state, 1.0, bump(state.x)))

    closure = bookkeeping_closure(config, frame, (0.0, 0.0), conservation)

    assert closure["mass"] == pytest.approx(math.sqrt(math.pi / 2.0) * 1e-6, rel=1e-3)
    assert closure["mass"] > 100.0 * closure["mass_tolerance"]



@pytest.mark.slow
def test_integrable_collision_is_elastic(kdv):
    config = CollisionConfig(
        model=kdv, c1=1.0, c2=0.25, initial="exact", contamination_limit=1e-8
    )

    report, track = run_collision(config)

    assert report.c1_plus == pytest.approx(1.0, abs=1e-4)
    assert report.c2_plus == pytest.approx(0.25, abs=1e-4)
    assert report.M_plus < 1e-8
    fast, slow = exact_phase_shifts_p2(1.0, 0.25)
    assert report.delta1 == pytest.approx(fast, abs=1e-3)
    assert report.delta2 == pytest.approx(slow, abs=1e-3)
    assert report.drifts["mass"] < 1e-7
    assert set(track.phases) == {"pre", "post"}
    assert residual_certificates(report, track).passed


@pytest.mark.slow
def test_symmetric_run_for_mkdv():
    config = CollisionConfig(model=pure_power(3), c1=1.0, c2=0.01)

    result = symmetric_run(config)

    assert result.t == pytest.approx(0.01**-0.51)
    assert result.relative_l2 < 1e-8
    assert math.isfinite(result.h1)


@pytest.mark.slow
def test_elastic_collision_with_fast_speed_four(kdv):
    config = CollisionConfig(model=kdv, c1=4.0, c2=1.0, initial="exact")

    report, track = run_collision(config)

    assert report.c1_plus == pytest.approx(4.0, abs=1e-4)
    assert report.c2_plus == pytest.approx(1.0, abs=1e-4)
    fast, _ = exact_phase_shifts_p2(4.0, 1.0)
    assert report.delta1 == pytest.approx(fast, abs=1e-3)
    table = residual_certificates(report, track)
    assert table.passed
    assert report.closure["mass"] <= report.closure["mass_tolerance"] + 1e-8


@pytest.mark.slow
def test_quartic_collision_certificates_and_bookkeeping():
    experiment = parse_config(
        {"run": {"preset": "quartic-p4"}, "collision": {"refine": True}},
        use_environment=False,
    )
    config = CollisionConfig.from_experiment(experiment)

    report, track = run_collision(config)
    table = residual_certificates(report, track)

    assert table.failures() == []
    by_name = {item.name: item for item in table.certificates}
    assert not by_name["orthogonality"].informational
    assert report.c1_plus > config.c1
    assert report.c2_plus < config.c2
    for name in ("mass", "energy"):
        assert report.closure[name] <= report.closure[f"{name}_tolerance"] + 1e-8
    assert math.isfinite(report.M_bookkeeping)
    assert math.isfinite(report.E_bookkeeping)
