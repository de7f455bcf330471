"""Two-soliton collision experiments in the frame of the slow wave.

A run starts from two well separated waves (bare sum, the integrable
solution for p = 2, or the approximate solution dressed at -T_{c1,c2}),
integrates through the interaction, fits both trajectories on windows
before and after it, and measures the outgoing speeds, the shifts and the
residual mass and energy left behind the fast wave.
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Deque, Dict, List, Tuple

import numpy as np
from scipy.stats import linregress

from shared.solitons.approx_solution import PhysicalApproxSolution, build_physical
from shared.solitons.errors import ConfigError, DegenerateFit, WindowContaminated
from shared.solitons.nonlinearity import NonlinearityModel
from shared.solitons.soliton_profile import amplitude, build_profile
from shared.spectral.pde_integrator import (
    ConservationTracker,
    FieldState,
    Sponge,
    calibrate_time_step,
    exact_two_soliton_speeds,
    manifest,
    run,
    run_backward,
    suggest_time_step,
)

from .fitting import FrameFit, Guess, fit_solitons

_LOGGER = logging.getLogger(__name__)

WINDOW_EXCESS = 0.01
MIN_SEPARATION_LENGTHS = 20.0
DOMAIN_PADDING = 20.0
CONTAMINATION_LENGTHS = 25.0
CUTOFF_GRID_LENGTHS = 5.0


def interaction_time(c1: float, c2: float) -> float:
    """T_{c1,c2} = c1^{-3/2} (c2/c1)^{-1/2 - 1/100}."""

    return c1**-1.5 * (c2 / c1) ** (-0.5 - WINDOW_EXCESS)


def _next_power_of_two(value: float) -> int:
    return 1 << max(4, math.ceil(math.log2(value)))


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CollisionConfig:
    model: NonlinearityModel
    c1: float
    c2: float
    sign: int = 1
    initial: str = "dressed"
    separation: float | None = None
    t_end: float | None = None
    pre_window: float = 1.0
    post_window: float = 1.0
    spacing: float | None = None
    n_modes: int | None = None
    dt: float | None = None
    calibrate: bool = False
    ceiling: float = 1e3
    stride: int = 10
    sponge: Sponge | None = None
    refine: bool = False
    late_samples: int = 3
    contamination_limit: float = 1e-10
    monotonicity_frames: int = 64
    truncation: Tuple[Tuple[int, int], ...] = ((1, 0),)
    workers: int = 1
    verify: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.c2 < self.c1:
            raise ConfigError("need 0 < c2 < c1")
        if self.initial not in ("dressed", "bare", "exact"):
            raise ConfigError(f"unknown initial data kind {self.initial!r}")
        if self.initial == "exact" and not (self.model.p == 2 and self.model.is_pure):
            raise ConfigError("exact initial data exist only for the pure p = 2 model")
        if self.sign == -1 and self.model.p != 3:
            raise ConfigError("a negative slow wave requires p = 3")
        if self.separation is not None and self.separation < self.min_separation:
            raise ConfigError(
                f"separation {self.separation:g} is below {self.min_separation:g}"
            )
        if self.start_time <= self.pre_window_time:
            raise ConfigError("the pre-collision window reaches the initial time")
        if self.initial == "dressed" and self.start_time < self.interaction_time:
            raise ConfigError("dressed data need T_start >= T_{c1,c2}")
        if self.end_time <= self.post_window_time:
            raise ConfigError("the post-collision window is empty")

    @classmethod
    def from_experiment(cls, experiment: Any, verify: bool = False) -> "CollisionConfig":
        """Build from a validated :class:`ExperimentConfig`."""

        integ = experiment.section("integrator")
        coll = experiment.section("collision")
        grid = experiment.section("grid")
        sponge = None
        if integ.get("sponge_strength", 0.0) > 0.0:
            sponge = Sponge(integ["sponge_strength"], integ.get("sponge_width", 20.0))
        return cls(
            model=experiment.model,
            c1=experiment.c1,
            c2=experiment.c2,
            sign=experiment.sign,
            initial=coll.get("initial", "dressed"),
            separation=coll.get("separation_physical"),
            t_end=coll.get("t_end_physical"),
            pre_window=coll.get("pre_window", 1.0),
            post_window=coll.get("post_window", 1.0),
            spacing=grid.get("spacing_physical"),
            n_modes=grid.get("n_modes"),
            dt=integ.get("dt"),
            calibrate=integ.get("calibrate", False) or verify,
            ceiling=integ.get("ceiling", 1e3),
            stride=integ.get("stride", 10),
            sponge=sponge,
            refine=coll.get("refine", False),
            late_samples=coll.get("late_samples", 3),
            contamination_limit=coll.get("contamination_limit", 1e-10),
            monotonicity_frames=coll.get("monotonicity_frames", 64),
            truncation=experiment.truncation,
            verify=verify,
        )

    @property
    def interaction_time(self) -> float:
        return interaction_time(self.c1, self.c2)

    @property
    def min_separation(self) -> float:
        return MIN_SEPARATION_LENGTHS / math.sqrt(self.c2)

    def _window(self, multiple: float) -> float:
        spread = 10.0 / (math.sqrt(self.c2) * (self.c1 - self.c2))
        return max(multiple * self.interaction_time, spread)

    @property
    def pre_window_time(self) -> float:
        return self._window(self.pre_window)

    @property
    def post_window_time(self) -> float:
        return self._window(self.post_window)

    @property
    def resolved_separation(self) -> float:
        if self.separation is not None:
            return self.separation
        return 2.0 * self.pre_window_time * (self.c1 - self.c2) + self.min_separation

    @property
    def start_time(self) -> float:
        """T_start > 0; the run begins at -T_start."""

        return self.resolved_separation / (self.c1 - self.c2)

    @property
    def end_time(self) -> float:
        return self.t_end if self.t_end is not None else self.start_time

    @property
    def domain_length(self) -> float:
        reach = (self.c1 - self.c2) * max(self.start_time, self.end_time)
        return 2.0 * (reach + MIN_SEPARATION_LENGTHS / math.sqrt(self.c2) + DOMAIN_PADDING)

    @property
    def grid_spacing(self) -> float:
        return self.spacing if self.spacing is not None else 0.1 / math.sqrt(self.c1)

    @property
    def modes(self) -> int:
        if self.n_modes is not None:
            return self.n_modes
        return _next_power_of_two(self.domain_length / self.grid_spacing)

    def describe(self) -> Dict[str, Any]:
        payload = {
            item.name: getattr(self, item.name)
            for item in fields(self)
            if item.name not in ("model", "sponge", "workers")
        }
        payload["model"] = self.model.describe()
        payload["sponge"] = None if self.sponge is None else asdict(self.sponge)
        payload["truncation"] = [list(index) for index in self.truncation]
        return payload


# ----------------------------------------------------------------------
# Track and report
# ----------------------------------------------------------------------
TRACK_COLUMNS = ["t", "phase", "c1", "rho1", "c2", "rho2", "eta_h1", "orthogonality"]
_SERIES = ("times", "phases", "c1", "rho1", "c2", "rho2", "eta_h1", "orthogonality")


@dataclass
class ModulationTrack:
    """(c_j(t), rho_j(t)) on the measurement windows, rho in lab coordinates.

    ``frames`` keeps a thinned sequence of post-collision snapshots with
    their fits for the late-time residual and the monotonicity checks.
    """

    times: List[float] = field(default_factory=list)
    phases: List[str] = field(default_factory=list)
    c1: List[float] = field(default_factory=list)
    rho1: List[float] = field(default_factory=list)
    c2: List[float] = field(default_factory=list)
    rho2: List[float] = field(default_factory=list)
    eta_h1: List[float] = field(default_factory=list)
    orthogonality: List[float] = field(default_factory=list)
    frames: List[Tuple[FieldState, FrameFit]] = field(default_factory=list, repr=False)

    def append(self, phase: str, fit: FrameFit, offset: float) -> bool:
        if any(t == fit.t and name == phase for t, name in zip(self.times, self.phases)):
            return False
        big, small = fit.fits
        self.times.append(fit.t)
        self.phases.append(phase)
        self.c1.append(big.c)
        self.rho1.append(big.rho + offset)
        self.c2.append(small.c)
        self.rho2.append(small.rho + offset)
        self.eta_h1.append(fit.eta_h1)
        self.orthogonality.append(max(abs(v) for v in fit.orthogonality))
        return True

    def sorted(self) -> "ModulationTrack":
        order = np.argsort(self.times, kind="stable")
        out = ModulationTrack(frames=sorted(self.frames, key=lambda item: item[0].t))
        for name in _SERIES:
            values = getattr(self, name)
            setattr(out, name, [values[j] for j in order])
        return out

    def phase(self, phase: str) -> Dict[str, np.ndarray]:
        picks = [j for j, name in enumerate(self.phases) if name == phase]
        return {
            name: np.asarray([getattr(self, name)[j] for j in picks])
            for name in ("times", "c1", "rho1", "c2", "rho2", "eta_h1")
        }

    def rows(self) -> List[List[Any]]:
        return [list(row) for row in zip(*(getattr(self, name) for name in _SERIES))]


@dataclass(frozen=True)
class Trajectory:
    speed: float
    intercept: float
    stderr: float
    samples: int


@dataclass(frozen=True)
class LateResidual:
    t: float
    mass: float
    energy: float
    quadratic_lower: float
    quadratic_upper: float
    h1: float


@dataclass
class CollisionReport:
    config: Dict[str, Any]
    c1_minus: float
    c2_minus: float
    c1_plus: float
    c2_plus: float
    c1_plus_fitted: float
    c2_plus_fitted: float
    delta1: float
    delta2: float
    delta1_at_window: float
    delta2_at_window: float
    M_plus: float
    E_plus: float
    M_bookkeeping: float
    E_bookkeeping: float
    closure: Dict[str, float]
    late: List[LateResidual]
    cauchy: Dict[str, float]
    drifts: Dict[str, float]
    sup_w_h1: float
    windows: Dict[str, float]
    resolution: Dict[str, Any]
    fitted_constants: Dict[str, float] = field(default_factory=dict)
    wall_clock: float | None = None

    def to_payload(self) -> Dict[str, Any]:
        payload = asdict(self)
        if payload["wall_clock"] is None:
            payload.pop("wall_clock")
        return payload

    def summary(self) -> Dict[str, float]:
        return {
            "c1": self.config["c1"],
            "c2": self.config["c2"],
            "c1_plus": self.c1_plus,
            "c2_plus": self.c2_plus,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "M_plus": self.M_plus,
            "E_plus": self.E_plus,
        }


# ----------------------------------------------------------------------
# Initial data
# ----------------------------------------------------------------------
def _physical_approx(config: CollisionConfig) -> PhysicalApproxSolution:
    return build_physical(config.model, config.c1, config.c2, config.truncation, config.sign)


def _state(config: CollisionConfig, t: float, lab_values: np.ndarray) -> FieldState:
    return FieldState(
        model=config.model,
        length=config.domain_length,
        u=lab_values,
        t=t,
        frame_speed=config.c2,
        sponge=config.sponge,
        workers=config.workers,
    )


def _frame_grid(config: CollisionConfig) -> np.ndarray:
    length, n = config.domain_length, config.modes
    return -0.5 * length + (length / n) * np.arange(n)


def initial_state(config: CollisionConfig) -> FieldState:
    """Field at the first integration time (-T_{c1,c2} for dressed data)."""

    x = _frame_grid(config)
    if config.initial == "dressed":
        approx = _physical_approx(config)
        t0 = -approx.window
        values = approx.evaluate(t0, x + config.c2 * t0)
    else:
        t0 = -config.start_time
        lab = x + config.c2 * t0
        if config.initial == "exact":
            values = exact_two_soliton_speeds(config.c1, config.c2, t0, lab)
        else:
            big = build_profile(config.model, config.c1)
            small = build_profile(config.model, config.c2, config.sign)
            values = big.evaluate(lab - config.c1 * t0) + small.evaluate(lab - config.c2 * t0)
    _LOGGER.info(
        "initial data (%s) at t=%g on %d modes, L=%g",
        config.initial,
        t0,
        x.size,
        config.domain_length,
    )
    return _state(config, t0, values)


# ----------------------------------------------------------------------
# Observers
# ----------------------------------------------------------------------
class _ModulationObserver:
    """Fits both waves on the measurement windows and keeps sampled frames."""

    name = "modulation"

    def __init__(self, config: CollisionConfig, track: ModulationTrack, keep_every: int) -> None:
        self.config = config
        self.track = track
        self.keep_every = max(1, keep_every)
        self.post_count = 0
        self.tail: Deque[Tuple[FieldState, FrameFit]] = deque(
            maxlen=max(1, config.late_samples)
        )
        self._last: Dict[str, Tuple[float, Tuple[Guess, Guess]]] = {}
        self.fast_amplitude = abs(amplitude(config.model, config.c1))

    def _phase(self, t: float) -> str | None:
        if t <= -self.config.pre_window_time:
            return "pre"
        if t >= self.config.post_window_time:
            return "post"
        return None

    def _guesses(self, phase: str, t: float) -> Tuple[Guess, Guess]:
        cfg = self.config
        if phase in self._last:
            t_last, (big, small) = self._last[phase]
            span = t - t_last
            return (
                Guess(big.location + (big.c - cfg.c2) * span, big.c),
                Guess(small.location + (small.c - cfg.c2) * span, small.c, cfg.sign),
            )
        return (
            Guess((cfg.c1 - cfg.c2) * t, cfg.c1),
            Guess(0.0, cfg.c2, cfg.sign),
        )

    def __call__(self, state: FieldState) -> float | None:
        phase = self._phase(state.t)
        if phase is None:
            return None
        fit = fit_solitons(state, self._guesses(phase, state.t), refine=self.config.refine)
        big, small = fit.fits
        self._last[phase] = (
            state.t,
            (Guess(big.rho, big.c), Guess(small.rho, small.c, self.config.sign)),
        )
        offset = self.config.c2 * state.t
        if not self.track.append(phase, fit, offset):
            return fit.eta_h1
        if phase == "post":
            self._check_contamination(state, fit)
            if self.post_count % self.keep_every == 0:
                self.track.frames.append((state, fit))
            self.tail.append((state, fit))
            self.post_count += 1
        return fit.eta_h1

    def _check_contamination(self, state: FieldState, fit: FrameFit) -> None:
        """Remainder ahead of the fast wave, relative to the amplitude of Q_{c1}."""

        edge = fit.fits[0].rho + CONTAMINATION_LENGTHS / math.sqrt(self.config.c1)
        ahead = state.x > edge
        if not np.any(ahead):
            raise WindowContaminated("the fast wave reached the end of the domain")
        level = float(np.max(np.abs(fit.eta[ahead]))) / self.fast_amplitude
        if level > self.config.contamination_limit:
            raise WindowContaminated(
                f"relative residual {level:.3e} ahead of the fast wave at t={state.t:g} "
                f"exceeds {self.config.contamination_limit:g}"
            )


class _ApproxDistanceObserver:
    """||u(t) - u_approx(t)||_H1 while the approximate solution is defined."""

    name = "approx_distance"

    def __init__(self, approx: PhysicalApproxSolution) -> None:
        self.approx = approx
        self.values: List[Tuple[float, float]] = []

    def __call__(self, state: FieldState) -> float | None:
        if abs(state.t) > self.approx.window:
            return None
        reference = self.approx.evaluate(state.t, state.lab_x, enforce_window=False)
        distance = state.h1_distance(reference)
        self.values.append((state.t, distance))
        return distance

    @property
    def sup(self) -> float:
        return max((value for _, value in self.values), default=0.0)


# ----------------------------------------------------------------------
# Measurements
# ----------------------------------------------------------------------
def _trajectory(times: np.ndarray, positions: np.ndarray) -> Trajectory:
    if times.size < 3:
        raise DegenerateFit("a trajectory fit needs at least three frames in the window")
    fit = linregress(times, positions)
    return Trajectory(
        speed=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        samples=int(times.size),
    )


def half_space_cutoff(state: FieldState, c2: float) -> np.ndarray:
    """Smooth indicator of x > c2 t / 10 over CUTOFF_GRID_LENGTHS grid cells."""

    width = CUTOFF_GRID_LENGTHS * state.dx
    return 0.5 * (1.0 + np.tanh((state.lab_x - 0.1 * c2 * state.t) / width))


def late_residual(state: FieldState, fit: FrameFit, c2: float) -> LateResidual:
    eta = fit.eta
    chi = half_space_cutoff(state, c2)
    eta_x = replace(state, u=eta).derivative()
    dx = state.dx
    mass = float(dx * np.sum(chi * eta * eta))
    energy = float(dx * np.sum(chi * (0.5 * eta_x * eta_x - state.model.F(eta))))
    gradient = float(dx * np.sum(chi * eta_x * eta_x))
    return LateResidual(
        t=state.t,
        mass=mass,
        energy=energy,
        quadratic_lower=gradient + c2 * mass,
        quadratic_upper=gradient + 2.0 * c2 * mass,
        h1=math.sqrt(gradient + mass),
    )


def _soliton_totals(config: CollisionConfig, c1: float, c2: float) -> Tuple[float, float]:
    model = config.model
    profiles = [build_profile(model, c1), build_profile(model, c2, config.sign)]
    return sum(p.mass for p in profiles), sum(p.energy for p in profiles)


def _bookkeeping(config: CollisionConfig, c1_plus: float, c2_plus: float) -> Tuple[float, float]:
    """M+ and E+ from the conserved quantities and the outgoing speeds."""

    before = _soliton_totals(config, config.c1, config.c2)
    after = _soliton_totals(config, c1_plus, c2_plus)
    return float(before[0] - after[0]), float(before[1] - after[1])


def bookkeeping_closure(
    config: CollisionConfig,
    frame: Tuple[FieldState, FrameFit],
    bookkeeping: Tuple[float, float],
    conservation: ConservationTracker,
) -> Dict[str, float]:
    """Whole-line residual of a late frame against the bookkeeping M+ and E+.

    The tolerance covers the conservation drift and the distance of the
    initial data from Q_{c1} + Q_{c2}. It also absorbs the bookkeeping change
    between the frame speeds and the mean outgoing speeds.
    """

    state, fit = frame
    solitons = replace(state, u=state.u - fit.eta)
    residual = (state.mass() - solitons.mass(), state.energy() - solitons.energy())
    before = _soliton_totals(config, config.c1, config.c2)
    at_frame = _bookkeeping(config, fit.fits[0].c, fit.fits[1].c)
    series = (np.asarray(conservation.masses), np.asarray(conservation.energies))
    closure: Dict[str, float] = {}
    for j, name in enumerate(("mass", "energy")):
        values = series[j] if series[j].size else np.asarray([before[j]])
        drift = float(np.max(np.abs(values - values[0])))
        closure[name] = abs(bookkeeping[j] - residual[j])
        closure[f"{name}_tolerance"] = (
            drift + abs(float(values[0]) - before[j]) + abs(bookkeeping[j] - at_frame[j])
        )
    return closure


def _time_step(config: CollisionConfig, state: FieldState) -> float:
    dt = config.dt or suggest_time_step(state)
    if config.calibrate:
        span = min(10.0, 0.1 * config.interaction_time)
        dt = calibrate_time_step(state, state.t + span, dt).dt
    return dt


def run_collision(config: CollisionConfig) -> Tuple[CollisionReport, ModulationTrack]:
    """Integrate through the collision and measure the outgoing waves."""

    started = time.perf_counter()
    state = initial_state(config)
    dt = _time_step(config, state)
    track = ModulationTrack()
    post_span = config.end_time - config.post_window_time
    expected_frames = post_span / (dt * config.stride)
    keep_every = int(expected_frames // config.monotonicity_frames) or 1
    modulation = _ModulationObserver(config, track, keep_every)
    conservation = ConservationTracker()
    observers: List[Any] = [modulation, conservation]
    approx_distance = None
    if config.initial == "dressed":
        approx_distance = _ApproxDistanceObserver(_physical_approx(config))
        observers.append(approx_distance)
        backward = run_backward(
            state,
            -config.start_time,
            dt,
            observers=[modulation],
            stride=config.stride,
            ceiling=config.ceiling,
        )
        _LOGGER.info("pre-collision leg reached t=%g", backward.state.t)

    forward = run(
        state,
        config.end_time,
        dt,
        observers=observers,
        stride=config.stride,
        ceiling=config.ceiling,
    )
    _LOGGER.info("collision run reached t=%g after %d steps", forward.state.t, forward.steps)

    ordered = track.sorted()
    pre, post = ordered.phase("pre"), ordered.phase("post")
    traj = {
        (j, phase): _trajectory(data["times"], data[f"rho{j}"])
        for j in (1, 2)
        for phase, data in (("pre", pre), ("post", post))
    }
    T = config.interaction_time
    deltas = {j: traj[(j, "post")].intercept - traj[(j, "pre")].intercept for j in (1, 2)}
    at_window = {
        j: deltas[j] + (traj[(j, "post")].speed - traj[(j, "pre")].speed) * T
        for j in (1, 2)
    }

    late = [late_residual(frame, fit, config.c2) for frame, fit in modulation.tail]
    if not late:
        raise DegenerateFit("no post-collision frames were recorded")
    cauchy = {
        "mass": max((abs(a.mass - b.mass) for a, b in zip(late, late[1:])), default=0.0),
        "energy": max(
            (abs(a.energy - b.energy) for a, b in zip(late, late[1:])), default=0.0
        ),
    }
    c1_plus, c2_plus = traj[(1, "post")].speed, traj[(2, "post")].speed
    c1_fitted, c2_fitted = float(np.mean(post["c1"])), float(np.mean(post["c2"]))
    m_book, e_book = _bookkeeping(config, c1_fitted, c2_fitted)
    closure = bookkeeping_closure(
        config, modulation.tail[-1], (m_book, e_book), conservation
    )

    sup_w = float(np.max(ordered.eta_h1)) if ordered.eta_h1 else 0.0
    if approx_distance is not None:
        sup_w = max(sup_w, approx_distance.sup)

    report = CollisionReport(
        config=config.describe(),
        c1_minus=traj[(1, "pre")].speed,
        c2_minus=traj[(2, "pre")].speed,
        c1_plus=c1_plus,
        c2_plus=c2_plus,
        c1_plus_fitted=c1_fitted,
        c2_plus_fitted=c2_fitted,
        delta1=deltas[1],
        delta2=deltas[2],
        delta1_at_window=at_window[1],
        delta2_at_window=at_window[2],
        M_plus=late[-1].mass,
        E_plus=late[-1].energy,
        M_bookkeeping=m_book,
        E_bookkeeping=e_book,
        closure=closure,
        late=late,
        cauchy=cauchy,
        drifts=conservation.drift(),
        sup_w_h1=sup_w,
        windows={
            "interaction": T,
            "pre_end": -config.pre_window_time,
            "post_start": config.post_window_time,
            "start": -config.start_time,
            "end": config.end_time,
        },
        resolution=manifest(forward.state, dt),
        wall_clock=None if config.verify else time.perf_counter() - started,
    )
    _LOGGER.info(
        "collision c1+=%.8g c2+=%.8g delta1=%.6g delta2=%.6g",
        c1_plus,
        c2_plus,
        report.delta1,
        report.delta2,
    )
    return report, ordered


# ----------------------------------------------------------------------
# Symmetry and stability runs
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SymmetryResult:
    t: float
    relative_l2: float
    h1: float


def symmetric_run(config: CollisionConfig, t: float | None = None) -> SymmetryResult:
    """Integrate the even data u(0) = u_approx(0) both ways and compare u(-t,-x) with u(t,x)."""

    approx = _physical_approx(config)
    t = approx.window if t is None else t
    x = _frame_grid(config)
    start = _state(replace(config, sponge=None), 0.0, approx.evaluate(0.0, x))
    dt = _time_step(config, start)
    ahead = run(start, t, dt, ceiling=config.ceiling).state
    behind = run_backward(start, -t, dt, ceiling=config.ceiling).state.reflected()
    diff = ahead.u - behind.u
    relative = float(np.linalg.norm(diff) / max(np.linalg.norm(ahead.u), 1e-300))
    result = SymmetryResult(t=float(t), relative_l2=relative, h1=ahead.h1_norm(diff))
    _LOGGER.info("symmetry defect at t=%g: %.3e", t, relative)
    return result


@dataclass(frozen=True)
class StabilityResult:
    epsilon: float
    sup_w_h1: float
    constant: float


def stability_run(config: CollisionConfig, epsilon: float | None = None) -> StabilityResult:
    """Dressed data plus epsilon * bump, integrated through the interaction window."""

    approx = _physical_approx(config)
    p = config.model.p
    ratio = config.c2 / config.c1
    scale = config.c1 ** (1.0 / (p - 1))
    if epsilon is None:
        epsilon = scale * ratio ** (1.0 / (p - 1) + 0.5)
    state = initial_state(replace(config, initial="dressed"))
    centre = 0.5 * (config.c1 + config.c2) * state.t - config.c2 * state.t
    width = 1.0 / math.sqrt(config.c2)
    bump = np.exp(-(((state.x - centre) / width) ** 2))
    bump = bump / state.h1_norm(bump)
    state = replace(state, u=state.u + epsilon * bump)

    observer = _ApproxDistanceObserver(approx)
    dt = _time_step(config, state)
    run(
        state,
        approx.window,
        dt,
        observers=[observer],
        stride=config.stride,
        ceiling=config.ceiling,
    )
    sup_w = observer.sup
    constant = sup_w / (scale * ratio ** (1.0 / (p - 1)))
    _LOGGER.info("stability run eps=%.3e sup|w|=%.3e K=%.3g", epsilon, sup_w, constant)
    return StabilityResult(epsilon=float(epsilon), sup_w_h1=sup_w, constant=float(constant))


__all__ = [
    "TRACK_COLUMNS",
    "CollisionConfig",
    "CollisionReport",
    "LateResidual",
    "ModulationTrack",
    "StabilityResult",
    "SymmetryResult",
    "Trajectory",
    "bookkeeping_closure",
    "half_space_cutoff",
    "initial_state",
    "interaction_time",
    "late_residual",
    "run_collision",
    "stability_run",
    "symmetric_run",
]
