"""Approximate two-soliton solution v(t, x), its defect S and the shift law.

Everything is posed in the normalized frame: the large soliton has speed 1 and
the frame moves with it, the small soliton has speed c. With
y_c = x + (1 - c) t and y = x - alpha(y_c),

    v = Q(y) + Q_c(y_c) + sum c^l ( Q_c^k(y_c) A_kl(y) + (Q_c^k)'(y_c) B_kl(y) )

and S = d_t v + d_x(v_xx - v + f(v)). Values and x-derivatives up to third
order are carried as jets, so S is evaluated pointwise without a periodic
embedding. S_x and S_xx then come from spectral differentiation of S.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import DerivativeMismatch, WindowExceeded
from .grids import UniformGrid
from .linearized_operator import build_operator
from .nonlinearity import NonlinearityModel
from .omega_solver import (
    Index,
    OmegaSolution,
    build_structurals,
    right_hand_side,
    solve_omega,
)
from .soliton_profile import SolitonProfile, build_profile, c_derivatives

_LOGGER = logging.getLogger(__name__)

WINDOW_EXCESS = 0.01
DEFECT_SPACING = 0.05
DEFECT_PADDING = 40.0
FD_TIME_STEP = 1e-4
FD_TOLERANCE = 1e-6
FD_SAMPLES = 3
DEFAULT_TRUNCATION: Tuple[Index, ...] = ((1, 0),)

Jet = Tuple[np.ndarray, ...]


def half_window(c: float) -> float:
    """T_c = c^{-1/2 - 1/100}."""

    return c ** (-0.5 - WINDOW_EXCESS)


# ----------------------------------------------------------------------
# Jet algebra (value plus x-derivatives)
# ----------------------------------------------------------------------
def _product(f: Jet, g: Jet) -> Jet:
    n = min(len(f), len(g))
    return tuple(
        sum(comb(m, j) * f[j] * g[m - j] for j in range(m + 1)) for m in range(n)
    )


def _compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of h(y(x)) from h, h', h'', h''' at y and the jet of y."""

    y1, y2, y3 = inner[1], inner[2], inner[3]
    return (
        outer[0],
        outer[1] * y1,
        outer[2] * y1 * y1 + outer[1] * y2,
        outer[3] * y1**3 + 3.0 * outer[2] * y1 * y2 + outer[1] * y3,
    )


def _power(base: Jet, k: int) -> Jet:
    out = base
    for _ in range(k - 1):
        out = _product(out, base)
    return out


# ----------------------------------------------------------------------
# Correction profiles
# ----------------------------------------------------------------------
class _TabulatedFunction:
    """Cubic splines of a decaying grid function and its first three derivatives.

    Outside the table the value continues as edge * exp(-(|y| - L)).
    """

    def __init__(self, grid: UniformGrid, values: np.ndarray) -> None:
        self.edge = float(grid.x[-1])
        self._splines = [CubicSpline(grid.x, values)] + [
            CubicSpline(grid.x, grid.derivative(values, order=j)) for j in (1, 2, 3)
        ]
        self._ends = (float(values[0]), float(values[-1]))

    def jet(self, y: np.ndarray) -> Jet:
        inside = np.abs(y) <= self.edge
        out = []
        outside = ~inside
        if np.any(outside):
            side = np.sign(y[outside])
            start = np.where(side > 0, self._ends[1], self._ends[0])
            tail = start * np.exp(-(np.abs(y[outside]) - self.edge))
        for order, spline in enumerate(self._splines):
            column = np.empty_like(y)
            column[inside] = spline(y[inside])
            if np.any(outside):
                column[outside] = (-side) ** order * tail
            out.append(column)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class CorrectionTerm:
    """(A, B) of one index (k, l) with B = B_bar + b phi."""

    index: Index
    a: float
    b: float
    solution: OmegaSolution
    profile: SolitonProfile
    _A: _TabulatedFunction = field(repr=False)
    _B_bar: _TabulatedFunction = field(repr=False)

    @classmethod
    def from_solution(
        cls, index: Index, solution: OmegaSolution, profile: SolitonProfile
    ) -> "CorrectionTerm":
        return cls(
            index=index,
            a=solution.a,
            b=solution.b,
            solution=solution,
            profile=profile,
            _A=_TabulatedFunction(profile.grid, solution.A),
            _B_bar=_TabulatedFunction(profile.grid, solution.B_bar),
        )

    @property
    def k(self) -> int:
        return self.index[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.index[1]

    def A_jet(self, y: np.ndarray) -> Jet:
        return self._A.jet(y)

    def B_jet(self, y: np.ndarray) -> Jet:
        bar = self._B_bar.jet(y)
        big = self.profile
        phi = (big.phi(y), big.phi_prime(y), big.phi_second(y), big.phi_third(y))
        return tuple(b_bar + self.b * p for b_bar, p in zip(bar, phi))


# ----------------------------------------------------------------------
# Parameters
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ApproxSolutionParams:
    model: NonlinearityModel
    c: float
    sign: int
    truncation: Tuple[Index, ...]
    terms: Tuple[CorrectionTerm, ...]
    big: SolitonProfile
    small: SolitonProfile
    T_c: float
    a10: float
    b10: float
    alpha_x: np.ndarray
    alpha_values: np.ndarray

    @property
    def alpha_limits(self) -> Tuple[float, float]:
        return float(self.alpha_values[0]), float(self.alpha_values[-1])

    def alpha(self, s: np.ndarray) -> np.ndarray:
        """alpha(s) = int_0^s beta, constant beyond the table."""

        spline = _alpha_spline(self)
        clipped = np.clip(s, self.alpha_x[0], self.alpha_x[-1])
        return spline(clipped)

    def beta(self, s: np.ndarray) -> np.ndarray:
        q = self.small.evaluate(np.asarray(s, dtype=float))
        out = np.zeros_like(q)
        for term in self.terms:
            out = out + term.a * self.c**term.l * q**term.k
        return out

    def describe(self) -> Dict[str, object]:
        return {
            "c": self.c,
            "sign": self.sign,
            "truncation": [list(index) for index in self.truncation],
            "T_c": self.T_c,
            "a10": self.a10,
            "b10": self.b10,
            "coefficients": {
                f"{t.k},{t.l}": {"a": t.a, "b": t.b} for t in self.terms
            },
        }


@lru_cache(maxsize=64)
def _alpha_spline(params: ApproxSolutionParams) -> CubicSpline:
    return CubicSpline(params.alpha_x, params.alpha_values)


@lru_cache(maxsize=16)
def _omega_data(
    model: NonlinearityModel, indices: Tuple[Index, ...]
) -> Tuple[SolitonProfile, float, Dict[Index, OmegaSolution]]:
    """Unit-speed profile, closed-form a_{1,0} and the model-system solutions."""

    big = build_profile(model, 1.0)
    op = build_operator(big)
    structurals = build_structurals(op, verify_identity=False)
    solutions = {}
    for index in sorted(set(indices) | {(1, 0)}):
        F, G = right_hand_side(op, index)
        solutions[index] = solve_omega(op, F, G, structurals)
    derivs = c_derivatives(model, 1.0, cross_check=False)
    a10 = 2.0 * derivs.d_integral / derivs.d_mass
    return big, float(a10), solutions


def build_params(
    model: NonlinearityModel,
    c: float,
    truncation: Sequence[Index] = DEFAULT_TRUNCATION,
    sign: int = 1,
) -> ApproxSolutionParams:
    """Assemble v for the normalized model at small speed c in (0, 1)."""

    if not 0.0 < c < 1.0:
        raise ValueError("the small speed must lie in (0, 1) in the normalized frame")
    indices = tuple(sorted({(int(k), int(l)) for k, l in truncation}))
    big, a10, solutions = _omega_data(model, indices)
    terms = tuple(
        CorrectionTerm.from_solution(index, solutions[index], big) for index in indices
    )
    small = build_profile(model, c, sign)

    grid = small.grid
    beta = np.zeros(grid.size)
    for term in terms:
        beta = beta + term.a * c**term.l * small.values**term.k
    alpha = grid.odd_part(grid.integral_from_origin(beta)) if terms else beta
    alpha.setflags(write=False)

    params = ApproxSolutionParams(
        model=model,
        c=float(c),
        sign=int(sign),
        truncation=indices,
        terms=terms,
        big=big,
        small=small,
        T_c=half_window(c),
        a10=a10,
        b10=solutions[(1, 0)].b,
        alpha_x=grid.x,
        alpha_values=alpha,
    )
    _LOGGER.debug("approximate solution c=%g truncation=%s", c, indices)
    return params


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------
def _check_window(params: ApproxSolutionParams, t: float) -> None:
    if abs(t) > params.T_c * (1.0 + 1e-12):
        raise WindowExceeded(f"|t| = {abs(t):g} exceeds T_c = {params.T_c:g}")


def _fields(params: ApproxSolutionParams, t: float, x: np.ndarray) -> Tuple[Jet, np.ndarray]:
    """Jet of v in x and the analytic d_t v."""

    c = params.c
    yc = x + (1.0 - c) * t
    qc = params.small.jet(yc, order=4)
    powers = {k: _power(qc, k) for k in {term.k for term in params.terms}}

    beta: Jet = (np.zeros_like(x),) * 3
    for term in params.terms:
        weight = term.a * c**term.l
        beta = tuple(b + weight * g for b, g in zip(beta, powers[term.k][:3]))

    y0 = x - params.alpha(yc)
    y_jet = (y0, 1.0 - beta[0], -beta[1], -beta[2])
    q = params.big.jet(y0, order=3)

    v = tuple(a + b for a, b in zip(_compose(q, y_jet), qc[:4]))
    dt = qc[1] - beta[0] * q[1]
    for term in params.terms:
        weight = c**term.l
        g = powers[term.k]
        a_jet = term.A_jet(y0)
        b_jet = term.B_jet(y0)
        added = [
            lhs + rhs
            for lhs, rhs in zip(
                _product(g[:4], _compose(a_jet, y_jet)),
                _product(g[1:5], _compose(b_jet, y_jet)),
            )
        ]
        v = tuple(acc + weight * extra for acc, extra in zip(v, added))
        dt = dt + weight * (
            g[1] * a_jet[0]
            - beta[0] * g[0] * a_jet[1]
            + g[2] * b_jet[0]
            - beta[0] * g[1] * b_jet[1]
        )
    return v, (1.0 - c) * dt


def evaluate_v(
    params: ApproxSolutionParams,
    t: float,
    x: np.ndarray,
    enforce_window: bool = True,
) -> np.ndarray:
    if enforce_window:
        _check_window(params, t)
    pts = np.asarray(x, dtype=float)
    v, _ = _fields(params, float(t), pts)
    return v[0]


def defect_field(
    params: ApproxSolutionParams, t: float, x: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise S and d_t v."""

    v, dt = _fields(params, float(t), np.asarray(x, dtype=float))
    S = dt + v[3] - v[1] + params.model.df(v[0]) * v[1]
    return S, dt


def defect_grid(params: ApproxSolutionParams, t: float) -> UniformGrid:
    """Symmetric grid covering both cores with DEFECT_PADDING decay lengths each."""

    reach = (1.0 - params.c) * abs(t) + DEFECT_PADDING / math.sqrt(params.c)
    return UniformGrid(reach + DEFECT_PADDING, DEFECT_SPACING)


@dataclass(frozen=True, eq=False)
class Defect:
    t: float
    grid: UniformGrid
    S: np.ndarray
    norms: Dict[str, float]
    time_derivative_error: float


def defect(
    params: ApproxSolutionParams,
    t: float,
    grid: UniformGrid | None = None,
    cross_check: bool = True,
    seed: int = 0,
) -> Defect:
    """S(t) on ``grid`` with its L2, S_x and S_xx norms."""

    _check_window(params, t)
    grid = grid or defect_grid(params, t)
    S, dt = defect_field(params, t, grid.x)
    error = _cross_check_time_derivative(params, t, grid.x, dt, seed) if cross_check else 0.0
    Sx = grid.derivative(S)
    Sxx = grid.derivative(S, order=2)
    norms = {"L2_S": grid.norm(S), "L2_Sx": grid.norm(Sx), "L2_Sxx": grid.norm(Sxx)}
    _LOGGER.debug("defect c=%g t=%g %s", params.c, t, norms)
    return Defect(t=float(t), grid=grid, S=S, norms=norms, time_derivative_error=error)


def _cross_check_time_derivative(
    params: ApproxSolutionParams,
    t: float,
    x: np.ndarray,
    dt: np.ndarray,
    seed: int,
) -> float:
    rng = np.random.default_rng(seed)
    picks = rng.choice(x.size, size=FD_SAMPLES, replace=False)
    pts = x[picks]
    h = FD_TIME_STEP
    ahead = evaluate_v(params, t + h, pts, enforce_window=False)
    behind = evaluate_v(params, t - h, pts, enforce_window=False)
    fd = (ahead - behind) / (2.0 * h)
    scale = float(np.max(np.abs(dt))) or 1.0
    error = float(np.max(np.abs(fd - dt[picks])))
    if error > FD_TOLERANCE * scale + 1e-12:
        raise DerivativeMismatch(
            f"analytic d_t v differs from finite differences by {error:.3e} "
            f"(scale {scale:.3e}) at t={t:g}"
        )
    return error / scale


# ----------------------------------------------------------------------
# Shift law and endpoint recomposition
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ShiftPrediction:
    delta: float
    first_order: float
    delta_c: float
    delta_c_truncated: bool = True


def predicted_shift(params: ApproxSolutionParams) -> ShiftPrediction:
    """Delta = sum a_kl c^l int Q_c^k; Delta_c only to first order 2 b_{1,0}."""

    small = params.small
    delta = sum(
        term.a * params.c**term.l * small.grid.integrate(small.values**term.k)
        for term in params.terms
    )
    delta_c = 2.0 * params.b10 if (1, 0) in params.truncation else 0.0
    return ShiftPrediction(
        delta=float(delta),
        first_order=float(params.a10 * small.integral),
        delta_c=float(delta_c),
    )


@dataclass(frozen=True)
class Recomposition:
    t: float
    q_shift: float
    qc_shift: float
    closeness: float
    tail: float
    alpha_plateau: float
    taylor: float


def endpoint_recomposition(
    params: ApproxSolutionParams, sign: int, grid: UniformGrid | None = None
) -> Recomposition:
    """H1 distance of v(sign T_c) to the shifted pair of solitary waves."""

    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    t = sign * params.T_c
    grid = grid or defect_grid(params, t)
    x = grid.x
    shift = predicted_shift(params)
    q_shift = sign * 0.5 * shift.delta
    qc_shift = sign * 0.5 * shift.delta_c
    c = params.c

    v = evaluate_v(params, t, x)
    yc = x + (1.0 - c) * t
    recomposed = params.big.evaluate(x - q_shift) + params.small.evaluate(yc - qc_shift)
    closeness = grid.h1_norm(v - recomposed)

    y = x - params.alpha(yc)
    tail = grid.norm(params.small.evaluate(yc) * np.exp(-0.5 * np.abs(y)))

    region = x >= -0.5 * params.T_c if sign > 0 else x <= 0.5 * params.T_c
    plateau = float(np.max(np.abs(params.alpha(yc[region]) - q_shift)))

    small = params.small
    b = params.b10
    taylor_gap = small.values - b * small.d1 - small.evaluate(small.x - b)
    taylor = small.grid.h1_norm(taylor_gap)

    return Recomposition(
        t=float(t),
        q_shift=float(q_shift),
        qc_shift=float(qc_shift),
        closeness=closeness,
        tail=tail,
        alpha_plateau=plateau,
        taylor=taylor,
    )


def modulated_closeness(
    params: ApproxSolutionParams, t: float, grid: UniformGrid | None = None
) -> Tuple[float, float]:
    """min over y0 of ||v(t) - Q(. - y0) - Q_c(. + (1 - c)t)||_H1, as (y0, distance)."""

    _check_window(params, t)
    grid = grid or defect_grid(params, t)
    x = grid.x
    v = evaluate_v(params, t, x)
    bare = v - params.small.evaluate(x + (1.0 - params.c) * t)
    guess = float(params.alpha(np.array([(1.0 - params.c) * t]))[0])

    def distance(y0: float) -> float:
        return grid.h1_norm(bare - params.big.evaluate(x - y0))

    result = minimize_scalar(
        distance, bounds=(guess - 1.0, guess + 1.0), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.x), float(result.fun)


# ----------------------------------------------------------------------
# Physical speeds (c1, c2)
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PhysicalApproxSolution:
    """u(t, x) = c1^{1/(p-1)} v(c1^{3/2} t, c1^{1/2} x - c1^{3/2} t)."""

    c1: float
    c2: float
    params: ApproxSolutionParams

    @property
    def p(self) -> int:
        return self.params.model.p

    @property
    def amplitude_scale(self) -> float:
        return self.c1 ** (1.0 / (self.p - 1))

    @property
    def window(self) -> float:
        return self.c1**-1.5 * self.params.T_c

    def _normalized(self, t: float, x: np.ndarray) -> Tuple[float, np.ndarray]:
        tau = self.c1**1.5 * t
        return tau, math.sqrt(self.c1) * np.asarray(x, dtype=float) - tau

    def evaluate(self, t: float, x: np.ndarray, enforce_window: bool = True) -> np.ndarray:
        if enforce_window and abs(t) > self.window * (1.0 + 1e-12):
            raise WindowExceeded(f"|t| = {abs(t):g} exceeds {self.window:g}")
        tau, xi = self._normalized(t, x)
        return self.amplitude_scale * evaluate_v(self.params, tau, xi, enforce_window=False)

    def defect_factor(self, derivative: int = 0) -> float:
        """c1^{(3+j)/2 + 1/(p-1)}."""

        return self.c1 ** ((3 + derivative) / 2.0 + 1.0 / (self.p - 1))

    def defect_field(self, t: float, x: np.ndarray) -> np.ndarray:
        tau, xi = self._normalized(t, x)
        S, _ = defect_field(self.params, tau, xi)
        return self.defect_factor() * S

    def shifts(self) -> ShiftPrediction:
        """Delta_1 = c1^{-1/2} Delta and the matching first-order value."""

        normalized = predicted_shift(self.params)
        root = math.sqrt(self.c1)
        return ShiftPrediction(
            delta=normalized.delta / root,
            first_order=normalized.first_order / root,
            delta_c=normalized.delta_c / root,
        )


def rescale_to(c1: float, c2: float, params: ApproxSolutionParams) -> PhysicalApproxSolution:
    if c1 <= 0 or c2 <= 0:
        raise ValueError("speeds must be positive")
    if not math.isclose(params.c, c2 / c1, rel_tol=1e-12):
        raise ValueError(f"params were built at c={params.c:g}, expected c2/c1={c2 / c1:g}")
    return PhysicalApproxSolution(c1=float(c1), c2=float(c2), params=params)


def build_physical(
    model: NonlinearityModel,
    c1: float,
    c2: float,
    truncation: Sequence[Index] = DEFAULT_TRUNCATION,
    sign: int = 1,
) -> PhysicalApproxSolution:
    """Approximate solution at physical speeds from the unnormalized model."""

    params = build_params(model.rescaled(c1), c2 / c1, truncation, sign)
    return rescale_to(c1, c2, params)


__all__ = [
    "ApproxSolutionParams",
    "CorrectionTerm",
    "Defect",
    "PhysicalApproxSolution",
    "Recomposition",
    "ShiftPrediction",
    "build_params",
    "build_physical",
    "defect",
    "defect_field",
    "defect_grid",
    "endpoint_recomposition",
    "evaluate_v",
    "half_window",
    "modulated_closeness",
    "predicted_shift",
    "rescale_to",
]
