"""Localized mass and energy of the post-collision remainder.

For each recorded frame the remainder eta = u - R_1 - R_2 is weighted by
psi(x) = (2/pi) arctan(exp(-x/4)) translated with the waves, and the four
almost non-increasing combinations are tracked:

    J1 = int Q_{c1(t)}^2 + M_1
    J2 = 2 E(Q_{c1(t)}) + 2 E_1 + (c1/100) J1
    J3 = int Q_{c1(t)}^2 + int Q_{c2(t)}^2 + M_2
    J4 = 2 E(Q_{c1(t)}) + 2 E(Q_{c2(t)}) + 2 E_2
         + (c2/100)(int Q_{c1(t)}^2 + int Q_{c2(t)}^2) + M_2

Each increment is compared with the exponentially small allowance
integrated over the step, and the smallest constant K covering every
positive increment is reported.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from shared.solitons.nonlinearity import NonlinearityModel
from shared.solitons.soliton_profile import build_profile
from shared.spectral.pde_integrator import FieldState

from .fitting import FrameFit

_LOGGER = logging.getLogger(__name__)

COMBINATIONS = ("J1", "J2", "J3", "J4")


def psi(x: np.ndarray) -> np.ndarray:
    return (2.0 / math.pi) * np.arctan(np.exp(-0.25 * np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class FrameQuantities:
    t: float
    c: Tuple[float, float]
    masses: Tuple[float, float]
    energies: Tuple[float, float]
    g: Tuple[float, float]
    profile_mass: Tuple[float, float]
    profile_energy: Tuple[float, float]

    def combinations(self, c_nominal: Tuple[float, float]) -> Dict[str, float]:
        c1, c2 = c_nominal
        m1, m2 = self.masses
        e1, e2 = self.energies
        q1, q2 = self.profile_mass
        en1, en2 = self.profile_energy
        j1 = q1 + m1
        return {
            "J1": j1,
            "J2": 2.0 * en1 + 2.0 * e1 + 0.01 * c1 * j1,
            "J3": q1 + q2 + m2,
            "J4": 2.0 * (en1 + en2) + 2.0 * e2 + 0.01 * c2 * (q1 + q2) + m2,
        }


@dataclass
class MonotonicitySeries:
    times: List[float] = field(default_factory=list)
    values: Dict[str, List[float]] = field(default_factory=lambda: {k: [] for k in COMBINATIONS})
    increments: Dict[str, List[float]] = field(
        default_factory=lambda: {k: [] for k in COMBINATIONS}
    )
    allowances: Dict[str, List[float]] = field(
        default_factory=lambda: {k: [] for k in COMBINATIONS}
    )
    constants: Dict[str, float] = field(default_factory=dict)

    def passes(self, k_max: float) -> Dict[str, bool]:
        return {name: self.constants.get(name, 0.0) <= k_max for name in COMBINATIONS}

    def rows(self) -> List[List[float]]:
        return [
            [t] + [self.values[name][j] for name in COMBINATIONS]
            for j, t in enumerate(self.times)
        ]


def _weight_argument(
    x: np.ndarray, rho: float, c_nominal: float, t: float, t0: float, x0: float
) -> np.ndarray:
    return math.sqrt(c_nominal) * (x - rho + x0 + 0.5 * c_nominal * (t - t0))


def g_weight(state: FieldState, fit: FrameFit, j: int, c_nominal: float) -> float:
    """g_j = int (eta_x^2 + c_j eta^2) exp(-sqrt(c_j) |x - rho_j| / 4)."""

    eta = fit.eta
    eta_x = _derivative(state, eta)
    rho = fit.fits[j].rho
    envelope = np.exp(-0.25 * math.sqrt(c_nominal) * np.abs(state.x - rho))
    return float(state.dx * np.sum((eta_x * eta_x + c_nominal * eta * eta) * envelope))


def _derivative(state: FieldState, values: np.ndarray) -> np.ndarray:
    return replace(state, u=values).derivative()


def _local_energy_density(
    model: NonlinearityModel,
    r: np.ndarray,
    eta: np.ndarray,
    eta_x: np.ndarray,
    f_sum: np.ndarray,
) -> np.ndarray:
    nonlinear = model.F(r + eta) - f_sum * eta - model.F(r)
    return 0.5 * eta_x * eta_x - nonlinear


def frame_quantities(
    state: FieldState,
    fit: FrameFit,
    c_nominal: Tuple[float, float],
    t0: float,
    x0: float,
) -> FrameQuantities:
    model = state.model
    x, dx = state.x, state.dx
    eta = fit.eta
    eta_x = _derivative(state, eta)
    profiles = [build_profile(model, f.c, f.sign) for f in fit.fits]
    waves = [p.evaluate(x - f.rho) for p, f in zip(profiles, fit.fits)]
    r = waves[0] + waves[1]
    f_sum = model.f(waves[0]) + model.f(waves[1])
    density = _local_energy_density(model, r, eta, eta_x, f_sum)

    masses, energies, gs = [], [], []
    for j in (0, 1):
        weight = psi(_weight_argument(x, fit.fits[j].rho, c_nominal[j], state.t, t0, x0))
        masses.append(float(dx * np.sum(eta * eta * weight)))
        energies.append(float(dx * np.sum(density * weight)))
        gs.append(g_weight(state, fit, j, c_nominal[j]))
    return FrameQuantities(
        t=state.t,
        c=(fit.fits[0].c, fit.fits[1].c),
        masses=(masses[0], masses[1]),
        energies=(energies[0], energies[1]),
        g=(gs[0], gs[1]),
        profile_mass=(profiles[0].mass, profiles[1].mass),
        profile_energy=(profiles[0].energy, profiles[1].energy),
    )


def allowance_rates(
    quantities: FrameQuantities,
    c_nominal: Tuple[float, float],
    t0: float,
    x0: float,
    interaction_time: float,
) -> Dict[str, float]:
    """Right-hand sides of the four differential inequalities with K = 1."""

    c1, c2 = c_nominal
    t = quantities.t
    g1, g2 = quantities.g
    far = math.exp(-c1 * math.sqrt(c2) * (t + interaction_time) / 32.0)
    fast = math.exp(-math.sqrt(c1) * (c1 * (t - t0) + x0) / 16.0) * g1
    slow_decay = math.exp(-(c2**1.5) * (t - t0) / 16.0)
    return {
        "J1": fast + far,
        "J2": fast + far,
        "J3": slow_decay * math.exp(-math.sqrt(c2) * x0 / 16.0) * math.sqrt(c2) * g2 + far,
        "J4": slow_decay * math.exp(-c2 * x0 / 16.0) * c2**1.5 * g2 + far,
    }


def monotonicity_diagnostics(
    frames: Sequence[Tuple[FieldState, FrameFit]],
    c_nominal: Tuple[float, float],
    interaction_time: float,
    x0: float | None = None,
) -> MonotonicitySeries:
    """Time series of J1..J4 with increments, allowances and fitted constants.

    ``frames`` are post-collision (state, fit) pairs in increasing time; t0 is
    the first frame time and x0 defaults to c1 t0 / 4.
    """

    series = MonotonicitySeries()
    if not frames:
        return series
    t0 = frames[0][0].t
    if x0 is None:
        x0 = 0.25 * c_nominal[0] * max(t0, 0.0)

    quantities = [frame_quantities(state, fit, c_nominal, t0, x0) for state, fit in frames]
    rates = [allowance_rates(q, c_nominal, t0, x0, interaction_time) for q in quantities]
    values = [q.combinations(c_nominal) for q in quantities]
    for q, v in zip(quantities, values):
        series.times.append(q.t)
        for name in COMBINATIONS:
            series.values[name].append(v[name])

    for j in range(1, len(quantities)):
        span = [quantities[j - 1].t, quantities[j].t]
        for name in COMBINATIONS:
            increment = values[j][name] - values[j - 1][name]
            budget = float(trapezoid([rates[j - 1][name], rates[j][name]], span))
            series.increments[name].append(increment)
            series.allowances[name].append(budget)

    for name in COMBINATIONS:
        ratios = [
            inc / max(budget, 1e-300)
            for inc, budget in zip(series.increments[name], series.allowances[name])
            if inc > 0.0
        ]
        series.constants[name] = max(ratios, default=0.0)
    _LOGGER.info("monotonicity constants over %d frames: %s", len(frames), series.constants)
    return series


__all__ = [
    "COMBINATIONS",
    "FrameQuantities",
    "MonotonicitySeries",
    "allowance_rates",
    "frame_quantities",
    "g_weight",
    "monotonicity_diagnostics",
    "psi",
]
