"""Finite-difference linearized operator L w = -w'' + c w - f'(Q_c) w.

The operator lives on the interior of the profile grid with homogeneous
Dirichlet ends (ghost values by odd reflection). Solves are carried out in
the even or odd subspace through prolongation P and restriction R, so the
reduced systems R A P stay banded. The odd subspace carries the near-kernel
direction Q'; odd solves deflate it explicitly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List

import numpy as np
from scipy import sparse
from scipy.linalg import eig_banded
from scipy.sparse.linalg import splu

from .errors import NonNegativeGroundState, NotOrthogonal, SingularSolve
from .grids import UniformGrid
from .soliton_profile import SolitonProfile

_LOGGER = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
ORTHOGONALITY_TOLERANCE = 1e-6
POTENTIAL_DECAY_LIMIT = 1e-12
_POWER_STEPS = 12
_KERNEL_STEPS = 3


@dataclass(frozen=True, eq=False)
class OperatorGrid:
    """Discretized L around a tabulated profile, with cached parity solvers."""

    profile: SolitonProfile
    stencil_order: int
    matrix: sparse.csc_matrix
    potential: np.ndarray
    _subspaces: dict = field(repr=False)

    @property
    def grid(self) -> UniformGrid:
        return self.profile.grid

    @property
    def x(self) -> np.ndarray:
        return self.profile.grid.x

    @property
    def c(self) -> float:
        return self.profile.c

    @property
    def q(self) -> np.ndarray:
        return self.profile.values

    @property
    def q_prime(self) -> np.ndarray:
        return self.profile.d1

    def subspace(self, parity: str) -> "_ParitySolver":
        try:
            return self._subspaces[parity]
        except KeyError:
            raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}") from None

    @cached_property
    def upper_band(self) -> np.ndarray:
        """Symmetric matrix in LAPACK upper band storage (3 x N)."""

        dense_diags = [self.matrix.diagonal(k) for k in (2, 1, 0)]
        size = self.matrix.shape[0]
        band = np.zeros((3, size))
        band[0, 2:] = dense_diags[0]
        band[1, 1:] = dense_diags[1]
        band[2, :] = dense_diags[2]
        return band


@dataclass(eq=False)
class _ParitySolver:
    parity: str
    prolong: sparse.csc_matrix
    rows: np.ndarray
    reduced: sparse.csc_matrix
    lu: object
    condition: float = float("nan")
    kernel: np.ndarray | None = None

    def solve(self, rhs_half: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs_half)  # type: ignore[attr-defined]


def _stencil_matrix(
    grid: UniformGrid, potential: np.ndarray, c: float, order: int
) -> sparse.csc_matrix:
    h2 = grid.spacing**2
    interior = potential[1:-1]
    size = interior.size
    if order == 4:
        main = np.full(size, 30.0 / (12.0 * h2)) + c - interior
        main[0] -= 1.0 / (12.0 * h2)
        main[-1] -= 1.0 / (12.0 * h2)
        off1 = np.full(size - 1, -16.0 / (12.0 * h2))
        off2 = np.full(size - 2, 1.0 / (12.0 * h2))
        return sparse.diags(
            [off2, off1, main, off1, off2], [-2, -1, 0, 1, 2], format="csc"
        )
    if order == 2:
        main = np.full(size, 2.0 / h2) + c - interior
        off1 = np.full(size - 1, -1.0 / h2)
        return sparse.diags([off1, main, off1], [-1, 0, 1], format="csc")
    raise ValueError(f"unsupported stencil order {order!r}")


def _prolongation(grid: UniformGrid, parity: str) -> tuple[sparse.csc_matrix, np.ndarray]:
    """Map half-line unknowns to interior values, plus the restriction rows."""

    size = grid.size - 2
    centre = grid.mid - 1
    first = 0 if parity == "even" else 1
    half = np.arange(first, grid.half_count)
    cols = np.arange(half.size)
    right = centre + half
    left = centre - half
    sign = 1.0 if parity == "even" else -1.0
    mirror = half > 0
    row_idx = np.concatenate([right, left[mirror]])
    col_idx = np.concatenate([cols, cols[mirror]])
    data = np.concatenate([np.ones(half.size), sign * np.ones(int(mirror.sum()))])
    prolong = sparse.csc_matrix((data, (row_idx, col_idx)), shape=(size, half.size))
    return prolong, right


def build_operator(profile: SolitonProfile, stencil_order: int = 4) -> OperatorGrid:
    """Discretize L around ``profile`` and factor both parity subspaces."""

    grid = profile.grid
    potential = np.asarray(profile.model.df(profile.values), dtype=float)
    edge = max(abs(potential[0]), abs(potential[-1]))
    if edge > POTENTIAL_DECAY_LIMIT:
        raise ValueError(
            f"potential f'(Q) is {edge:.2e} at the boundary; widen the grid"
        )
    matrix = _stencil_matrix(grid, potential, profile.c, stencil_order)
    subspaces = {}
    for parity in ("even", "odd"):
        prolong, rows = _prolongation(grid, parity)
        reduced = sparse.csc_matrix(matrix.tocsr()[rows, :] @ prolong)
        try:
            lu = splu(reduced)
        except RuntimeError as exc:
            raise SingularSolve(f"{parity} subspace factorization failed: {exc}") from exc
        subspaces[parity] = _ParitySolver(parity, prolong, rows, reduced, lu)
    op = OperatorGrid(
        profile=profile,
        stencil_order=stencil_order,
        matrix=matrix,
        potential=potential,
        _subspaces=subspaces,
    )
    _prepare_odd_kernel(op)
    for parity in ("even", "odd"):
        solver = op.subspace(parity)
        solver.condition = _condition_estimate(solver)
        _LOGGER.debug("%s subspace condition estimate %.3e", parity, solver.condition)
    return op


def _restrict(op: OperatorGrid, values: np.ndarray, parity: str) -> np.ndarray:
    solver = op.subspace(parity)
    return np.asarray(values)[solver.rows + 1]


def _prolong(op: OperatorGrid, half: np.ndarray, parity: str) -> np.ndarray:
    solver = op.subspace(parity)
    out = np.zeros(op.grid.size)
    out[1:-1] = solver.prolong @ half
    return out


def _prepare_odd_kernel(op: OperatorGrid) -> None:
    """Near-kernel vector of the odd block by inverse iteration from Q'."""

    solver = op.subspace("odd")
    vec = _restrict(op, op.q_prime, "odd")
    vec = vec / np.linalg.norm(vec)
    for _ in range(_KERNEL_STEPS):
        vec = solver.solve(vec)
        vec = vec / np.linalg.norm(vec)
    if vec @ _restrict(op, op.q_prime, "odd") < 0:
        vec = -vec
    solver.kernel = vec


def _condition_estimate(solver: _ParitySolver) -> float:
    size = solver.reduced.shape[0]
    forward = float(abs(solver.reduced).sum(axis=1).max())
    vec = np.cos(np.linspace(0.0, 3.0, size)) + 0.5
    deflate: Callable[[np.ndarray], np.ndarray]
    if solver.kernel is not None:
        kernel = solver.kernel
        deflate = lambda v: v - (v @ kernel) * kernel  # noqa: E731
    else:
        deflate = lambda v: v  # noqa: E731
    vec = deflate(vec)
    vec /= np.linalg.norm(vec)
    growth = 0.0
    for _ in range(_POWER_STEPS):
        nxt = deflate(solver.solve(vec))
        growth = float(np.linalg.norm(nxt))
        if not np.isfinite(growth) or growth == 0.0:
            return float("inf")
        vec = nxt / growth
    return forward * growth


# ----------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------
def apply(op: OperatorGrid, w: np.ndarray) -> np.ndarray:
    """Lw by stencil; boundary entries are c*w since the potential vanishes there."""

    values = op.grid.check(w)
    out = np.empty_like(values)
    out[1:-1] = op.matrix @ values[1:-1]
    h2 = op.grid.spacing**2
    if op.stencil_order == 4:
        out[1] += (-16.0 * values[0]) / (12.0 * h2)
        out[2] += values[0] / (12.0 * h2)
        out[-2] += (-16.0 * values[-1]) / (12.0 * h2)
        out[-3] += values[-1] / (12.0 * h2)
    else:
        out[1] += -values[0] / h2
        out[-2] += -values[-1] / h2
    out[0] = op.c * values[0]
    out[-1] = op.c * values[-1]
    return out


def solve(op: OperatorGrid, h: np.ndarray, parity: str = "auto") -> np.ndarray:
    """w with Lw = h and <w, Q'> = 0, solved in the parity subspace of h."""

    rhs = op.grid.check(h)
    if parity == "auto":
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        out = np.zeros_like(rhs)
        for part, name in ((op.grid.even_part(rhs), "even"), (op.grid.odd_part(rhs), "odd")):
            if np.max(np.abs(part)) > 1e-14 * scale:
                out += solve(op, part, name)
        return out
    solver = op.subspace(parity)
    if solver.condition > CONDITION_LIMIT:
        raise SingularSolve(
            f"{parity} subspace condition estimate {solver.condition:.2e} "
            f"exceeds {CONDITION_LIMIT:.0e}"
        )
    if parity == "odd":
        _check_orthogonal(op, rhs)
    half = solver.solve(_restrict(op, rhs, parity))
    if parity == "odd":
        q_half = _restrict(op, op.q_prime, "odd")
        kernel = solver.kernel
        half = half - (half @ q_half) / (kernel @ q_half) * kernel
    return _prolong(op, half, parity)


def _check_orthogonal(op: OperatorGrid, rhs: np.ndarray) -> None:
    grid = op.grid
    pairing = grid.inner(rhs, op.q_prime)
    bound = ORTHOGONALITY_TOLERANCE * grid.norm(rhs) * grid.norm(op.q_prime)
    if abs(pairing) > bound:
        raise NotOrthogonal(
            f"<h, Q'> = {pairing:.3e} exceeds tolerance {bound:.3e}; "
            "the right-hand side has a component along the odd kernel"
        )


@dataclass(frozen=True, eq=False)
class GroundState:
    lambda0: float
    chi0: np.ndarray
    next_eigenvalue: float
    next_eigenfunction: np.ndarray


def spectrum(op: OperatorGrid, count: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``count`` eigenpairs of the symmetric discretization."""

    values, vectors = eig_banded(
        op.upper_band, lower=False, select="i", select_range=(0, count - 1)
    )
    full = np.zeros((op.grid.size, count))
    full[1:-1, :] = vectors
    return values, full


def ground_eigenvalue(op: OperatorGrid) -> GroundState:
    """L chi0 = -lambda0 chi0 with lambda0 > 0 and chi0 > 0, L2-normalized."""

    values, vectors = spectrum(op, 2)
    lambda0 = -float(values[0])
    if lambda0 <= 0.0:
        raise NonNegativeGroundState(
            f"smallest eigenvalue {values[0]:.3e} is not negative"
        )
    chi0 = _normalize(op, vectors[:, 0])
    nxt = _normalize(op, vectors[:, 1])
    if op.grid.inner(nxt, op.q_prime) < 0:
        nxt = -nxt
    return GroundState(
        lambda0=lambda0,
        chi0=chi0,
        next_eigenvalue=float(values[1]),
        next_eigenfunction=nxt,
    )


def _normalize(op: OperatorGrid, vec: np.ndarray) -> np.ndarray:
    vec = vec / op.grid.norm(vec)
    return -vec if vec.sum() < 0 else vec


def coercivity_constant(op: OperatorGrid, samples: int = 50, seed: int = 0) -> float:
    """min <Lw, w>/|w|^2 over random bumps projected off Q and Q'."""

    grid = op.grid
    rng = np.random.default_rng(seed)
    q, dq = op.q, op.q_prime
    ratios: List[float] = []
    reach = 8.0 / np.sqrt(op.c)
    for _ in range(samples):
        centres = rng.uniform(-reach, reach, size=3)
        widths = rng.uniform(0.5, 3.0, size=3) / np.sqrt(op.c)
        weights = rng.normal(size=3)
        w = sum(
            a * np.exp(-(((grid.x - x0) / s) ** 2))
            for a, x0, s in zip(weights, centres, widths)
        )
        w = w - grid.inner(w, q) / grid.inner(q, q) * q
        w = w - grid.inner(w, dq) / grid.inner(dq, dq) * dq
        ratios.append(grid.inner(apply(op, w), w) / grid.inner(w, w))
    return float(min(ratios))


def dump_banded(op: OperatorGrid, path: str) -> None:
    """Write the upper band (rows: second superdiagonal, first, main) as text."""

    np.savetxt(path, op.upper_band, fmt="%.17e", header=f"h={op.grid.spacing!r} c={op.c!r}")


__all__ = [
    "CONDITION_LIMIT",
    "GroundState",
    "OperatorGrid",
    "apply",
    "build_operator",
    "coercivity_constant",
    "dump_banded",
    "ground_eigenvalue",
    "solve",
    "spectrum",
]
