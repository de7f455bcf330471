"""Solitary-wave profiles Q_c solving Q'' + f(Q) = c Q.

Pure powers use the closed sech form. Perturbed nonlinearities integrate the
first integral (Q')^2 = c Q^2 - 2F(Q) in the peak variable q = A(1 - s^2),
which removes the square-root singularity at the amplitude A, and switch to
log Q once Q <= A/2 so the tails keep full relative accuracy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import NoSolitaryWave, QuadratureFailure
from .grids import UniformGrid
from .nonlinearity import NonlinearityModel

_LOGGER = logging.getLogger(__name__)

REFERENCE_GRID = UniformGrid(half_width=50.0, spacing=0.02)
MIN_DECAY_LENGTHS = 40.0
FD_EPSILON = 1e-4
_AMPLITUDE_SCAN_POINTS = 4000
_PEAK_TAYLOR_CUTOFF = 1e-2
_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-14


def default_grid(c: float) -> UniformGrid:
    """Reference grid stretched to the decay length 1/sqrt(c)."""

    return REFERENCE_GRID.scaled(1.0 / math.sqrt(c))


def _check_sign(model: NonlinearityModel, sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and model.p != 3:
        raise ValueError("negative profiles exist only for p = 3")
    return sign


def _closed_form_amplitude(p: int, c: float) -> float:
    return ((p + 1) * c / 2.0) ** (1.0 / (p - 1))


# ----------------------------------------------------------------------
# Amplitude
# ----------------------------------------------------------------------
def amplitude(
    model: NonlinearityModel, c: float, sign: int = 1, ceiling: float | None = None
) -> float:
    """Turning point Q_c(0): smallest m > 0 with c m^2 = 2 F(sign m), times sign."""

    if c <= 0:
        raise ValueError("speed must be positive")
    _check_sign(model, sign)
    if model.is_pure:
        return sign * _closed_form_amplitude(model.p, c)
    return sign * _root_amplitude(model, c, sign, ceiling)


def _root_amplitude(
    model: NonlinearityModel, c: float, sign: int, ceiling: float | None = None
) -> float:
    pure = _closed_form_amplitude(model.p, c)
    limit = ceiling or max(10.0, 4.0 * pure)

    def gap(m: float) -> float:
        return c * m * m - 2.0 * float(model.F(sign * m))

    levels = np.geomspace(1e-3 * min(pure, limit), limit, _AMPLITUDE_SCAN_POINTS)
    values = c * levels**2 - 2.0 * np.asarray(model.F(sign * levels))
    crossing = np.flatnonzero(values <= 0.0)
    if crossing.size == 0 or crossing[0] == 0:
        raise NoSolitaryWave(
            f"no turning point below {limit:g} for c={c:g} (c outside (0, c_*))"
        )
    j = int(crossing[0])
    root = brentq(gap, levels[j - 1], levels[j], xtol=1e-15, rtol=4e-16)
    slope = c * root - sign * float(model.f(sign * root))
    if slope >= -1e-10 * max(1.0, c * root):
        raise NoSolitaryWave(f"degenerate turning point at c={c:g}")
    return float(root)


# ----------------------------------------------------------------------
# Profile value object
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SolitonProfile:
    """Tabulated Q_c, Q_c', Q_c'' on a symmetric grid plus its functionals."""

    model: NonlinearityModel
    c: float
    sign: int
    grid: UniformGrid
    amplitude: float
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    mass: float
    integral: float
    energy: float

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @cached_property
    def d3(self) -> np.ndarray:
        return (self.c - self.model.df(self.values)) * self.d1

    def functionals(self) -> Dict[str, float]:
        return {"mass": self.mass, "integral": self.integral, "energy": self.energy}

    # ------------------------------------------------------------------
    # Off-grid evaluation
    # ------------------------------------------------------------------
    def evaluate(self, x: np.ndarray, derivative: int = 0) -> np.ndarray:
        """Q_c^{(derivative)}(x) at arbitrary points, derivative in 0..3."""

        pts = np.asarray(x, dtype=float)
        if self.model.is_pure:
            q, dq = _closed_form(self.model.p, self.c, self.sign, pts)
        else:
            q, dq = self._interpolated(pts)
        if derivative == 0:
            return q
        if derivative == 1:
            return dq
        if derivative == 2:
            return self.c * q - self.model.f(q)
        if derivative == 3:
            return (self.c - self.model.df(q)) * dq
        raise ValueError(f"unsupported derivative order {derivative!r}")

    def jet(self, x: np.ndarray, order: int = 3) -> tuple[np.ndarray, ...]:
        """(Q, Q', ..., Q^(order)) at arbitrary points, order <= 4."""

        pts = np.asarray(x, dtype=float)
        if self.model.is_pure:
            q, dq = _closed_form(self.model.p, self.c, self.sign, pts)
        else:
            q, dq = self._interpolated(pts)
        model = self.model
        d2q = self.c * q - model.f(q)
        d3q = (self.c - model.df(q)) * dq
        d4q = (self.c - model.df(q)) * d2q - model.d2f(q) * dq * dq
        return (q, dq, d2q, d3q, d4q)[: order + 1]

    @cached_property
    def _splines(self) -> tuple[CubicSpline, CubicSpline]:
        return CubicSpline(self.x, self.values), CubicSpline(self.x, self.d1)

    def _interpolated(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        edge = self.x[-1]
        inside = np.abs(pts) <= edge
        q = np.empty_like(pts)
        dq = np.empty_like(pts)
        value_spline, slope_spline = self._splines
        q[inside] = value_spline(pts[inside])
        dq[inside] = slope_spline(pts[inside])
        outside = ~inside
        if np.any(outside):
            rate = math.sqrt(self.c)
            tail = self.values[-1] * np.exp(-rate * (np.abs(pts[outside]) - edge))
            q[outside] = tail
            dq[outside] = -np.sign(pts[outside]) * rate * tail
        return q, dq

    # ------------------------------------------------------------------
    # phi = -Q'/Q and its companions
    # ------------------------------------------------------------------
    def phi(self, x: np.ndarray | None = None) -> np.ndarray:
        """phi = -Q'/Q = sgn(x) sqrt(c - 2F(Q)/Q^2), odd, |phi| < sqrt(c)."""

        pts, q = self._points(x)
        ratio = _safe_ratio(2.0 * self.model.F(q), q * q)
        return np.sign(pts) * np.sqrt(np.clip(self.c - ratio, 0.0, None))

    def phi_prime(self, x: np.ndarray | None = None) -> np.ndarray:
        _, q = self._points(x)
        return _safe_ratio(q * self.model.f(q) - 2.0 * self.model.F(q), q * q)

    def phi_second(self, x: np.ndarray | None = None) -> np.ndarray:
        _, q = self._points(x)
        numerator = (
            q * q * self.model.df(q) - 3.0 * q * self.model.f(q) + 4.0 * self.model.F(q)
        )
        return -self.phi(x) * _safe_ratio(numerator, q * q)

    def phi_third(self, x: np.ndarray | None = None) -> np.ndarray:
        _, q = self._points(x)
        model = self.model
        numerator = (
            q * q * model.df(q) - 3.0 * q * model.f(q) + 4.0 * model.F(q)
        )
        shape = _safe_ratio(numerator, q * q)
        # d/dQ of the bracket above, times Q'
        slope = _safe_ratio(
            q**3 * model.d2f(q) - 3.0 * q * q * model.df(q) + 7.0 * q * model.f(q)
            - 8.0 * model.F(q),
            q**3,
        )
        dq = -self.phi(x) * q
        return -self.phi_prime(x) * shape - self.phi(x) * slope * dq

    def l_phi(self, x: np.ndarray | None = None) -> np.ndarray:
        """-phi'' + c phi - f'(Q) phi in closed form."""

        _, q = self._points(x)
        phi = self.phi(x)
        return -self.phi_second(x) + (self.c - self.model.df(q)) * phi

    def _points(self, x: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
        if x is None:
            return self.x, self.values
        pts = np.asarray(x, dtype=float)
        return pts, self.evaluate(pts)


def _safe_ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0.0)
    return out


def _closed_form(p: int, c: float, sign: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    kappa = 0.5 * (p - 1) * math.sqrt(c)
    power = 2.0 / (p - 1)
    z = np.abs(kappa * x)
    log_sech = math.log(2.0) - z - np.log1p(np.exp(-2.0 * z))
    q = sign * _closed_form_amplitude(p, c) * np.exp(power * log_sech)
    dq = -math.sqrt(c) * np.tanh(kappa * x) * q
    return q, dq


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------
def build_profile(
    model: NonlinearityModel,
    c: float,
    sign: int = 1,
    grid: UniformGrid | None = None,
) -> SolitonProfile:
    """Tabulate Q_c on ``grid`` (defaults to the reference grid scaled to c)."""

    if c <= 0:
        raise ValueError("speed must be positive")
    _check_sign(model, sign)
    grid = grid or default_grid(c)
    if grid.x[-1] < MIN_DECAY_LENGTHS / math.sqrt(c) - 1e-9:
        raise ValueError(
            f"grid half-width {grid.x[-1]:g} is below {MIN_DECAY_LENGTHS:g}/sqrt(c)"
        )
    return _cached_profile(model, float(c), int(sign), grid)


@lru_cache(maxsize=128)
def _cached_profile(
    model: NonlinearityModel, c: float, sign: int, grid: UniformGrid
) -> SolitonProfile:
    amp = amplitude(model, c, sign)
    if model.is_pure:
        values, d1 = _closed_form(model.p, c, sign, grid.x)
    else:
        values, d1 = _integrate_profile(model, c, sign, abs(amp), grid)
    _LOGGER.debug("built profile p=%s c=%g sign=%+d n=%d", model.p, c, sign, grid.size)
    return _assemble(model, c, sign, grid, amp, values, d1)


def _assemble(
    model: NonlinearityModel,
    c: float,
    sign: int,
    grid: UniformGrid,
    amp: float,
    values: np.ndarray,
    d1: np.ndarray,
) -> SolitonProfile:
    d2 = c * values - model.f(values)
    for arr in (values, d1, d2):
        arr.setflags(write=False)
    return SolitonProfile(
        model=model,
        c=c,
        sign=sign,
        grid=grid,
        amplitude=float(amp),
        values=values,
        d1=d1,
        d2=d2,
        mass=grid.integrate(values * values),
        integral=grid.integrate(values),
        energy=grid.integrate(0.5 * d1 * d1 - model.F(values)),
    )


def _integrate_profile(
    model: NonlinearityModel, c: float, sign: int, amp: float, grid: UniformGrid
) -> tuple[np.ndarray, np.ndarray]:
    def gap(m: np.ndarray) -> np.ndarray:
        return c * m * m - 2.0 * model.F(sign * m)

    g1 = 2.0 * (c * amp - sign * model.f(sign * amp))
    g2 = 2.0 * (c - model.df(sign * amp))
    g3 = -2.0 * sign * model.d2f(sign * amp)

    def peak_ratio(s: float) -> float:
        # gap(amp (1 - s^2)) / s^2
        if s < _PEAK_TAYLOR_CUTOFF:
            return -g1 * amp + 0.5 * g2 * amp**2 * s * s - g3 * amp**3 * s**4 / 6.0
        return float(gap(amp * (1.0 - s * s))) / (s * s)

    def peak_rhs(_x: float, state: np.ndarray) -> list[float]:
        ratio = peak_ratio(float(state[0]))
        if ratio <= 0.0:
            raise QuadratureFailure(
                f"first integral lost positivity near the peak (c={c:g})"
            )
        return [math.sqrt(ratio) / (2.0 * amp)]

    def reached_half(_x: float, state: np.ndarray) -> float:
        return float(state[0]) ** 2 - 0.5

    reached_half.terminal = True  # type: ignore[attr-defined]

    def tail_rhs(_x: float, state: np.ndarray) -> list[float]:
        m = math.exp(float(state[0]))
        radicand = c - 2.0 * float(model.F(sign * m)) / (m * m)
        if radicand <= 0.0:
            raise QuadratureFailure(f"first integral lost positivity in the tail (c={c:g})")
        return [-math.sqrt(radicand)]

    x_half = grid.x[grid.mid :]
    edge = float(x_half[-1])
    peak = solve_ivp(
        peak_rhs,
        (0.0, edge),
        [0.0],
        method="DOP853",
        rtol=_ODE_RTOL,
        atol=_ODE_ATOL,
        dense_output=True,
        events=reached_half,
    )
    if peak.status < 0 or not peak.t_events[0].size:
        raise QuadratureFailure(f"peak quadrature failed: {peak.message}")
    x_switch = float(peak.t_events[0][0])
    tail = solve_ivp(
        tail_rhs,
        (x_switch, edge),
        [math.log(0.5 * amp)],
        method="DOP853",
        rtol=_ODE_RTOL,
        atol=_ODE_ATOL,
        dense_output=True,
    )
    if tail.status < 0:
        raise QuadratureFailure(f"tail quadrature failed: {tail.message}")

    near = x_half <= x_switch
    m_half = np.empty_like(x_half)
    s = peak.sol(x_half[near])[0]
    m_half[near] = amp * (1.0 - s * s)
    m_half[~near] = np.exp(tail.sol(x_half[~near])[0])
    if np.any(np.diff(m_half) > 0.0) or np.any(m_half <= 0.0):
        raise QuadratureFailure("profile is not monotone on x > 0")

    radicand = c - 2.0 * model.F(sign * m_half) / (m_half * m_half)
    slope_half = -m_half * np.sqrt(np.clip(radicand, 0.0, None))
    slope_half[0] = 0.0

    values = sign * np.concatenate([m_half[:0:-1], m_half])
    d1 = sign * np.concatenate([-slope_half[:0:-1], slope_half])
    return values, d1


# ----------------------------------------------------------------------
# Derived quantities
# ----------------------------------------------------------------------
def functionals(profile: SolitonProfile) -> Dict[str, float]:
    return profile.functionals()


@dataclass(frozen=True, eq=False)
class LambdaProfile:
    """d/dc Q_c on the profile grid by finite differences and by L(LQ) = -Q."""

    x: np.ndarray
    finite_difference: np.ndarray
    operator: np.ndarray
    agreement: float


@dataclass(frozen=True, eq=False)
class CDerivatives:
    d_integral: float
    d_mass: float
    d_energy: float
    lam: LambdaProfile
    stable: bool


def c_derivatives(
    model: NonlinearityModel,
    c: float,
    sign: int = 1,
    grid: UniformGrid | None = None,
    epsilon: float = FD_EPSILON,
    cross_check: bool = True,
) -> CDerivatives:
    """Richardson-extrapolated central differences in c, cross-checked with L."""

    base = build_profile(model, c, sign, grid)
    grid = base.grid

    def central(step: float) -> tuple[float, float, float, np.ndarray]:
        hi = build_profile(model, c + step, sign, grid)
        lo = build_profile(model, c - step, sign, grid)
        scale = 1.0 / (2.0 * step)
        return (
            (hi.integral - lo.integral) * scale,
            (hi.mass - lo.mass) * scale,
            (hi.energy - lo.energy) * scale,
            (hi.values - lo.values) * scale,
        )

    coarse = central(epsilon * c)
    fine = central(0.5 * epsilon * c)
    d_int, d_mass, d_energy, lam_fd = (
        (4.0 * f - g) / 3.0 for f, g in zip(fine, coarse)
    )

    if cross_check:
        from .linearized_operator import build_operator, solve

        op = build_operator(base)
        lam_op = solve(op, -base.values, parity="even")
        agreement = grid.norm(lam_fd - lam_op) / max(grid.norm(lam_op), 1e-300)
    else:
        lam_op = np.full_like(lam_fd, np.nan)
        agreement = float("nan")

    stable = d_mass > 0.0
    if not stable:
        _LOGGER.warning(
            "stability flag: d/dc int Q_c^2 = %.3e <= 0 at c=%g (p=%s)",
            d_mass,
            c,
            model.p,
        )
    return CDerivatives(
        d_integral=float(d_int),
        d_mass=float(d_mass),
        d_energy=float(d_energy),
        lam=LambdaProfile(
            x=grid.x, finite_difference=lam_fd, operator=lam_op, agreement=agreement
        ),
        stable=stable,
    )


def rescale_profile(profile: SolitonProfile, target_c1: float) -> SolitonProfile:
    """Profile of the speed-c1 rescaled nonlinearity at speed c / c1."""

    if target_c1 <= 0:
        raise ValueError("rescaling speed must be positive")
    p = profile.model.p
    scale = target_c1 ** (-1.0 / (p - 1))
    root = math.sqrt(target_c1)
    grid = profile.grid.scaled(root)
    return _assemble(
        profile.model.rescaled(target_c1),
        profile.c / target_c1,
        profile.sign,
        grid,
        scale * profile.amplitude,
        scale * np.array(profile.values),
        scale / root * np.array(profile.d1),
    )


# ----------------------------------------------------------------------
# Identity checks
# ----------------------------------------------------------------------
def first_integral_residual(profile: SolitonProfile) -> float:
    q, dq = profile.values, profile.d1
    residual = dq * dq + 2.0 * profile.model.F(q) - profile.c * q * q
    return float(np.max(np.abs(residual)) / (profile.c * profile.amplitude**2))


def ode_residual(profile: SolitonProfile) -> float:
    """max |Q'' + f(Q) - cQ| / |amplitude| with Q'' the spectral derivative of Q'."""

    q = profile.values
    d2 = profile.grid.derivative(profile.d1)
    residual = d2 + profile.model.f(q) - profile.c * q
    return float(np.max(np.abs(residual)) / abs(profile.amplitude))


def power_identity_residual(profile: SolitonProfile, k: int) -> float:
    """Relative error of (Q^k)'' = k^2 c Q^k - 2k(k-1) Q^{k-2} F(Q) - k f(Q) Q^{k-1}."""

    if k < 1:
        raise ValueError("k must be a positive integer")
    q = profile.values
    model = profile.model
    lhs = profile.grid.derivative(q**k, order=2)
    rhs = k * k * profile.c * q**k - k * model.f(q) * q ** (k - 1)
    if k >= 2:
        rhs = rhs - 2.0 * k * (k - 1) * q ** (k - 2) * model.F(q)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


def decay_envelope_constant(profile: SolitonProfile) -> float:
    """Smallest K with Q_c / (c^{1/(p-1)} e^{-sqrt(c)|x|}) in [1/K, K] at 5 and 10 decay lengths."""

    root = math.sqrt(profile.c)
    pts = np.array([5.0, -5.0, 10.0, -10.0]) / root
    envelope = profile.c ** (1.0 / (profile.model.p - 1)) * np.exp(-root * np.abs(pts))
    ratios = np.abs(profile.evaluate(pts)) / envelope
    return float(max(ratios.max(), 1.0 / ratios.min()))


__all__ = [
    "CDerivatives",
    "LambdaProfile",
    "REFERENCE_GRID",
    "SolitonProfile",
    "amplitude",
    "power_identity_residual",
    "build_profile",
    "c_derivatives",
    "decay_envelope_constant",
    "default_grid",
    "first_integral_residual",
    "functionals",
    "ode_residual",
    "rescale_profile",
]
