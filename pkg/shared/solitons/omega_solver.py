"""Model system for the correction profiles (A, B) and the coefficients (a, b).

Solves, on the unit-speed profile Q,

    (L A)' + a (3Q - 2f(Q))'              = F     (F odd)
    (L B)' + 3a Q'' - 3A'' - f'(Q) A      = G     (G even)

with A even, B = B_bar + b*phi, B_bar odd and decaying, phi = -Q'/Q.
The coefficient b multiplies phi, so b = int_0^inf (D - a Z0).
Only the first-order right-hand side ((f'(Q))', f'(Q)) is registered; further
orders plug in through :func:`register_right_hand_side`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from .errors import Degenerate, NotOrthogonal
from .linearized_operator import OperatorGrid, apply, build_operator, solve
from .nonlinearity import NonlinearityModel
from .soliton_profile import build_profile, c_derivatives

_LOGGER = logging.getLogger(__name__)

PARITY_TOLERANCE = 1e-8
NONDEGENERACY_TOLERANCE = 1e-8
ROUTE_TOLERANCE = 0.01

Index = Tuple[int, int]
RightHandSide = Callable[[OperatorGrid], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class Structurals:
    """V0, V1 and the pairings Z0, Z1 built from them."""

    V0: np.ndarray
    V1: np.ndarray
    Z0: np.ndarray
    Z1: np.ndarray
    z0_q: float
    z1_q: float
    v0_identity_error: float


@dataclass(frozen=True, eq=False)
class OmegaSolution:
    a: float
    b: float
    A: np.ndarray
    B_bar: np.ndarray
    B: np.ndarray
    x: np.ndarray
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def summary(self) -> Dict[str, float]:
        return {"a": self.a, "b": self.b, **self.diagnostics}


def _require_unit_speed(op: OperatorGrid) -> None:
    if not math.isclose(op.c, 1.0, rel_tol=1e-12):
        raise ValueError("the model system is posed around the unit-speed profile")


def build_structurals(op: OperatorGrid, verify_identity: bool = True) -> Structurals:
    """V0 = L^-1(3Q - 2f(Q)), V1 = L^-1 f'(Q) and Z0, Z1."""

    _require_unit_speed(op)
    model = op.profile.model
    q = op.q
    pot = op.potential
    source0 = 3.0 * q - 2.0 * model.f(q)
    V0 = solve(op, source0, "even")
    V1 = solve(op, pot, "even")
    # V'' = (1 - f'(Q)) V - L V
    V0_dd = (1.0 - pot) * V0 - source0
    V1_dd = (1.0 - pot) * V1 - pot
    Z0 = 3.0 * op.profile.d2 + 3.0 * V0_dd + pot * V0
    Z1 = 3.0 * V1_dd + pot * V1 + pot

    identity_error = float("nan")
    if verify_identity:
        lam = c_derivatives(
            model, op.c, op.profile.sign, op.grid, cross_check=False
        ).lam.finite_difference
        expected = -lam - op.x * op.q_prime
        identity_error = op.grid.norm(V0 - expected) / op.grid.norm(expected)
        _LOGGER.debug("V0 = -LQ - xQ' holds to %.2e", identity_error)

    grid = op.grid
    return Structurals(
        V0=V0,
        V1=V1,
        Z0=Z0,
        Z1=Z1,
        z0_q=grid.inner(Z0, q),
        z1_q=grid.inner(Z1, q),
        v0_identity_error=identity_error,
    )


def _check_parity(op: OperatorGrid, values: np.ndarray, parity: str, name: str) -> None:
    grid = op.grid
    scale = grid.norm(values)
    if scale == 0.0:
        return
    wrong = grid.even_part(values) if parity == "odd" else grid.odd_part(values)
    if grid.norm(wrong) > PARITY_TOLERANCE * scale:
        raise ValueError(f"{name} must be {parity}")


def solve_omega(
    op: OperatorGrid,
    F: np.ndarray,
    G: np.ndarray,
    structurals: Structurals | None = None,
) -> OmegaSolution:
    """Solve the model system for (a, b, A, B_bar) and report residuals."""

    _require_unit_speed(op)
    grid = op.grid
    F = grid.check(F)
    G = grid.check(G)
    _check_parity(op, F, "odd", "F")
    _check_parity(op, G, "even", "G")
    structurals = structurals or build_structurals(op, verify_identity=False)
    profile = op.profile
    model = profile.model
    q, pot = op.q, op.potential

    cumulative = grid.cumulative_integral(F)
    cum_norm = grid.norm(cumulative)
    asymmetry = grid.norm(grid.odd_part(cumulative)) / cum_norm if cum_norm else 0.0
    H = grid.even_part(cumulative)

    H_bar = solve(op, H, "even")
    H_bar_dd = (1.0 - pot) * H_bar - H
    D = 3.0 * H_bar_dd + pot * H_bar + G

    Z0 = structurals.Z0
    z0_q = structurals.z0_q
    if abs(z0_q) < NONDEGENERACY_TOLERANCE * grid.norm(Z0) * grid.norm(q):
        raise Degenerate(f"<Z0, Q> = {z0_q:.3e} vanishes; the soliton is critical")
    a = grid.inner(D, q) / z0_q

    residual_source = D - a * Z0
    from_origin = grid.integral_from_origin(residual_source)
    b = float(from_origin[-1])
    tail_bound = float(abs(residual_source[-1]))

    l_phi = profile.l_phi()
    E = from_origin - b * l_phi
    e_pairing = grid.inner(E, op.q_prime)
    e_scale = max(grid.norm(E), 1e-300) * grid.norm(op.q_prime)
    if abs(e_pairing) > 1e-6 * e_scale and grid.norm(E) > 0:
        raise NotOrthogonal(f"<E, Q'> = {e_pairing:.3e} after fixing (a, b)")
    E = grid.odd_part(E)

    B_bar = solve(op, E, "odd") if grid.norm(E) > 0 else np.zeros_like(E)
    A = H_bar - a * structurals.V0
    phi = profile.phi()
    B = B_bar + b * phi

    # residuals by direct substitution
    LA = apply(op, A)
    source0 = 3.0 * q - 2.0 * model.f(q)
    first = grid.derivative(LA + a * source0) - F
    LB = apply(op, B_bar) + b * l_phi
    second = (
        grid.derivative(LB)
        + 3.0 * a * profile.d2
        - 3.0 * grid.derivative(A, order=2)
        - pot * A
        - G
    )
    f_scale = grid.norm(F) or 1.0
    g_scale = grid.norm(G) or 1.0

    diagnostics = {
        "residual_first": grid.norm(first) / f_scale,
        "residual_second": grid.norm(second) / g_scale,
        "e_q_prime": abs(e_pairing),
        "e_limit": float(abs(E[-1])),
        "h_asymmetry": float(asymmetry),
        "b_tail_bound": tail_bound,
        "z0_q": z0_q,
    }
    _LOGGER.debug("omega solve a=%.6g b=%.6g %s", a, b, diagnostics)
    return OmegaSolution(
        a=float(a), b=b, A=A, B_bar=B_bar, B=B, x=grid.x, diagnostics=diagnostics
    )


# ----------------------------------------------------------------------
# Right-hand sides per order
# ----------------------------------------------------------------------
def _first_order_rhs(op: OperatorGrid) -> Tuple[np.ndarray, np.ndarray]:
    model = op.profile.model
    F = model.d2f(op.q) * op.q_prime
    G = np.array(op.potential)
    return F, G


RIGHT_HAND_SIDES: Dict[Index, RightHandSide] = {(1, 0): _first_order_rhs}


def register_right_hand_side(index: Index, builder: RightHandSide) -> None:
    """Attach (F, G) for a further order (k, l); (1, 0) cannot be replaced."""

    if index == (1, 0):
        raise ValueError("the first-order right-hand side is fixed")
    RIGHT_HAND_SIDES[index] = builder


def right_hand_side(op: OperatorGrid, index: Index) -> Tuple[np.ndarray, np.ndarray]:
    try:
        builder = RIGHT_HAND_SIDES[index]
    except KeyError:
        raise KeyError(f"no right-hand side registered for order {index}") from None
    return builder(op)


# ----------------------------------------------------------------------
# First-order shift coefficient
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ShiftCoefficient:
    a10: float
    delta: float
    delta1: float
    a10_omega: float
    b10: float
    relative_gap: float
    solution: OmegaSolution

    @property
    def routes_agree(self) -> bool:
        return self.relative_gap <= ROUTE_TOLERANCE


def shift_coefficient(
    model: NonlinearityModel, c1: float = 1.0, sign: int = 1
) -> ShiftCoefficient:
    """a_{1,0} = 2 (d/dc int Q_c) / (d/dc int Q_c^2) and delta1(c1), checked by the model system."""

    normalized = model.rescaled(c1)
    derivs = c_derivatives(normalized, 1.0, sign, cross_check=False)
    if abs(derivs.d_mass) < 1e-10:
        raise Degenerate("d/dc int Q_c^2 vanishes at the working speed")
    a10 = 2.0 * derivs.d_integral / derivs.d_mass
    profile = build_profile(normalized, 1.0, sign)
    delta = a10 * profile.integral

    op = build_operator(profile)
    F, G = right_hand_side(op, (1, 0))
    solution = solve_omega(op, F, G)
    gap = abs(a10 - solution.a) / max(abs(a10), abs(solution.a), 1e-6)
    if gap > ROUTE_TOLERANCE:
        _LOGGER.warning(
            "a_{1,0} routes disagree: closed form %.6g vs model system %.6g", a10, solution.a
        )
    return ShiftCoefficient(
        a10=float(a10),
        delta=float(delta),
        delta1=float(delta / math.sqrt(c1)),
        a10_omega=solution.a,
        b10=solution.b,
        relative_gap=float(gap),
        solution=solution,
    )


__all__ = [
    "OmegaSolution",
    "RIGHT_HAND_SIDES",
    "ShiftCoefficient",
    "Structurals",
    "build_structurals",
    "register_right_hand_side",
    "right_hand_side",
    "shift_coefficient",
    "solve_omega",
]
