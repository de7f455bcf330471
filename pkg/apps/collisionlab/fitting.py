"""Modulation fits of solitary waves to a field snapshot.

Each wave is located by parabolic interpolation of the samples around its
peak. Then every (c_j, rho_j) is fitted jointly by least squares of
u - sum_j Q_{c_j}(x - rho_j) over the union of the fit windows. An optional
refinement solves the orthogonality conditions
<eta, R_j> = <eta, (x - rho_j) R_j> = 0 instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, root

from shared.solitons.errors import FitDiverged, NoSolitaryWave, Overlapping
from shared.solitons.nonlinearity import NonlinearityModel
from shared.solitons.soliton_profile import SolitonProfile, build_profile
from shared.spectral.pde_integrator import FieldState

_LOGGER = logging.getLogger(__name__)

WINDOW_DECAY_LENGTHS = 8.0
MIN_WINDOW_FRACTION = 0.5
ORTHOGONALITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Guess:
    """Expected location and speed of one wave (frame coordinates)."""

    location: float
    c: float
    sign: int = 1


@dataclass(frozen=True)
class SolitonFit:
    c: float
    rho: float
    peak: float
    window: Tuple[float, float]
    sign: int = 1


@dataclass(frozen=True, eq=False)
class FrameFit:
    """Fits for every wave in a frame, with the remainder eta = u - sum R_j."""

    t: float
    fits: Tuple[SolitonFit, ...]
    eta: np.ndarray
    eta_h1: float
    orthogonality: Tuple[float, ...]
    refined: bool


def _profile(model: NonlinearityModel, c: float, sign: int) -> SolitonProfile:
    if c <= 0.0:
        raise FitDiverged(f"fitted speed left the admissible range (c={c:g})")
    try:
        return build_profile(model, c, sign)
    except NoSolitaryWave as exc:
        raise FitDiverged(str(exc)) from exc


def _parabolic_peak(x: np.ndarray, values: np.ndarray) -> float:
    j = int(np.argmax(values))
    j = min(max(j, 1), values.size - 2)
    left, mid, right = values[j - 1], values[j], values[j + 1]
    curvature = left - 2.0 * mid + right
    offset = 0.5 * (left - right) / curvature if curvature != 0.0 else 0.0
    return float(x[j] + offset * (x[1] - x[0]))


def locate_peaks(state: FieldState, guesses: Sequence[Guess]) -> List[float]:
    x = state.x
    peaks = []
    for guess in guesses:
        reach = 0.5 * WINDOW_DECAY_LENGTHS / math.sqrt(guess.c)
        near = np.abs(x - guess.location) <= reach
        if np.count_nonzero(near) < 3:
            raise FitDiverged(f"no samples near the expected location {guess.location:g}")
        peaks.append(_parabolic_peak(x[near], guess.sign * state.u[near]))
    return peaks


def _windows(peaks: Sequence[float], guesses: Sequence[Guess]) -> List[Tuple[float, float]]:
    half = [WINDOW_DECAY_LENGTHS / math.sqrt(g.c) for g in guesses]
    order = np.argsort(peaks)
    bounds = [[peaks[j] - half[j], peaks[j] + half[j]] for j in range(len(peaks))]
    for left, right in zip(order[:-1], order[1:]):
        gap = peaks[right] - peaks[left]
        reach = half[left] + half[right]
        if gap >= reach:
            continue
        shrink = gap / reach
        if shrink < MIN_WINDOW_FRACTION:
            raise Overlapping(
                f"waves at {peaks[left]:g} and {peaks[right]:g} are {gap:g} apart; "
                f"fit windows need {MIN_WINDOW_FRACTION * reach:g}"
            )
        bounds[left][1] = peaks[left] + shrink * half[left]
        bounds[right][0] = peaks[right] - shrink * half[right]
    return [(lo, hi) for lo, hi in bounds]


def _superposition(
    model: NonlinearityModel, params: np.ndarray, signs: Sequence[int], x: np.ndarray
) -> np.ndarray:
    total = np.zeros_like(x)
    for j, sign in enumerate(signs):
        c, rho = params[2 * j], params[2 * j + 1]
        total = total + _profile(model, float(c), sign).evaluate(x - rho)
    return total


def fit_solitons(
    state: FieldState,
    guesses: Sequence[Guess],
    refine: bool = False,
) -> FrameFit:
    """Fit (c_j, rho_j) for each guessed wave in ``state``."""

    model = state.model
    peaks = locate_peaks(state, guesses)
    windows = _windows(peaks, guesses)
    x = state.x
    mask = np.zeros(x.size, dtype=bool)
    for lo, hi in windows:
        mask |= (x >= lo) & (x <= hi)
    xs, us = x[mask], state.u[mask]
    signs = [g.sign for g in guesses]

    start = np.ravel([[g.c, peak] for g, peak in zip(guesses, peaks)])
    lower = np.ravel([[1e-3 * g.c, -np.inf] for g in guesses])
    upper = np.ravel([[1e3 * g.c, np.inf] for g in guesses])

    def residual(params: np.ndarray) -> np.ndarray:
        return _superposition(model, params, signs, xs) - us

    result = least_squares(
        residual,
        start,
        bounds=(lower, upper),
        x_scale=np.ravel([[g.c, 1.0 / math.sqrt(g.c)] for g in guesses]),
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    if result.status <= 0 or not np.all(np.isfinite(result.x)):
        raise FitDiverged(f"least squares did not converge: {result.message}")
    params = result.x
    _LOGGER.debug("least squares fit at t=%g: %s (cost %.3e)", state.t, params, result.cost)

    if refine:
        params = _refine_orthogonal(state, params, signs)

    eta = state.u - _superposition(model, params, signs, x)
    orthogonality = _orthogonality(state, params, signs, eta)
    fits = tuple(
        SolitonFit(
            c=float(params[2 * j]),
            rho=float(params[2 * j + 1]),
            peak=peaks[j],
            window=windows[j],
            sign=signs[j],
        )
        for j in range(len(guesses))
    )
    return FrameFit(
        t=state.t,
        fits=fits,
        eta=eta,
        eta_h1=state.h1_norm(eta),
        orthogonality=orthogonality,
        refined=refine,
    )


def _orthogonality(
    state: FieldState, params: np.ndarray, signs: Sequence[int], eta: np.ndarray
) -> Tuple[float, ...]:
    x, dx = state.x, state.dx
    out = []
    for j, sign in enumerate(signs):
        c, rho = float(params[2 * j]), float(params[2 * j + 1])
        R = _profile(state.model, c, sign).evaluate(x - rho)
        out.append(float(dx * np.sum(R * eta)))
        out.append(float(dx * np.sum((x - rho) * R * eta)))
    return tuple(out)


def _refine_orthogonal(
    state: FieldState, start: np.ndarray, signs: Sequence[int]
) -> np.ndarray:
    model = state.model

    def conditions(params: np.ndarray) -> np.ndarray:
        eta = state.u - _superposition(model, params, signs, state.x)
        return np.asarray(_orthogonality(state, params, signs, eta))

    solution = root(conditions, start, method="hybr", options={"xtol": 1e-13})
    if not solution.success:
        raise FitDiverged(f"orthogonality refinement failed: {solution.message}")
    residual = float(np.max(np.abs(solution.fun)))
    if residual > ORTHOGONALITY_TOLERANCE * max(1.0, float(np.max(np.abs(state.u)))):
        raise FitDiverged(f"orthogonality conditions hold only to {residual:.3e}")
    return solution.x


__all__ = [
    "FrameFit",
    "Guess",
    "SolitonFit",
    "fit_solitons",
    "locate_peaks",
]
