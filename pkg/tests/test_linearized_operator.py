from __future__ import annotations

import numpy as np
import pytest

from shared.solitons.errors import NotOrthogonal, SingularSolve
from shared.solitons.linearized_operator import (
    apply,
    coercivity_constant,
    dump_banded,
    ground_eigenvalue,
    solve,
    spectrum,
)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_ground_eigenvalue_matches_closed_form(unit_operators, p):
    ground = ground_eigenvalue(unit_operators[p])
    assert ground.lambda0 == pytest.approx((p + 1) ** 2 / 4.0 - 1.0, rel=1e-5)
    assert np.all(ground.chi0 >= -1e-12)
    assert unit_operators[p].grid.norm(ground.chi0) == pytest.approx(1.0)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_translation_mode_is_in_the_kernel(unit_operators, p):
    op = unit_operators[p]
    residual = op.grid.norm(apply(op, op.q_prime)) / op.grid.norm(op.q_prime)
    assert residual < 1e-5
    values, _ = spectrum(op, 3)
    assert abs(values[1]) < 1e-5


@pytest.mark.parametrize("p", [2, 3, 4])
def test_operator_on_the_profile(unit_operators, p):
    # L Q = -(p - 1) Q^p for pure powers
    op = unit_operators[p]
    expected = -(p - 1) * op.q**p
    assert op.grid.norm(apply(op, op.q) - expected) / op.grid.norm(expected) < 1e-6


def test_even_solve_inverts_apply(unit_operators):
    op = unit_operators[2]
    w = np.exp(-(op.x**2))
    assert np.allclose(solve(op, apply(op, w), "even"), w, atol=1e-9)


def test_odd_solve_projects_out_the_kernel(unit_operators):
    op = unit_operators[2]
    grid, dq = op.grid, op.q_prime
    h = op.x * np.exp(-(op.x**2))
    h = h - grid.inner(h, dq) / grid.inner(dq, dq) * dq
    w = solve(op, h, "odd")
    assert abs(grid.inner(w, dq)) < 1e-8 * grid.norm(w) * grid.norm(dq)
    assert grid.norm(apply(op, w) - h) / grid.norm(h) < 1e-6


def test_auto_parity_splits_the_right_hand_side(unit_operators):
    op = unit_operators[3]
    h = np.exp(-((op.x - 0.5) ** 2))
    h = h - op.grid.inner(h, op.q_prime) / op.grid.inner(op.q_prime, op.q_prime) * op.q_prime
    w = solve(op, h)
    assert op.grid.norm(apply(op, w) - h) / op.grid.norm(h) < 1e-6


def test_odd_solve_rejects_kernel_component(unit_operators):
    op = unit_operators[2]
    with pytest.raises(NotOrthogonal):
        solve(op, op.q_prime, "odd")
    assert issubclass(NotOrthogonal, SingularSolve)


def test_unknown_parity(unit_operators):
    with pytest.raises(ValueError, match="parity"):
        solve(unit_operators[2], unit_operators[2].q, "diagonal")


def test_coercivity_on_the_orthogonal_complement(unit_operators):
    assert coercivity_constant(unit_operators[2], samples=20) > 0.0


def test_dump_banded_writes_three_rows(unit_operators, tmp_path):
    target = tmp_path / "band.txt"
    dump_banded(unit_operators[2], str(target))
    band = np.loadtxt(target)
    assert band.shape == (3, unit_operators[2].grid.size - 2)
