from __future__ import annotations

import math

import numpy as np
import pytest

from shared.solitons.approx_solution import (
    FD_TOLERANCE,
    build_params,
    build_physical,
    defect,
    endpoint_recomposition,
    evaluate_v,
    half_window,
    predicted_shift,
    rescale_to,
)
from shared.solitons.errors import WindowExceeded
from shared.solitons.grids import UniformGrid
from shared.solitons.nonlinearity import pure_power


@pytest.fixture(scope="module")
def kdv_params():
    return build_params(pure_power(2), 0.05)


def test_half_window():
    assert half_window(0.01) == pytest.approx(0.01**-0.51)
    assert half_window(0.01) > 10.0


@pytest.mark.parametrize("c", [0.0, 1.0, 1.5])
def test_small_speed_must_be_below_one(kdv, c):
    with pytest.raises(ValueError):
        build_params(kdv, c)


def test_first_order_shift_for_kdv(kdv):
    c = 1e-3
    shift = predicted_shift(build_params(kdv, c))
    # a_{1,0} int Q_c = (2/3)(6 sqrt c)
    assert shift.first_order == pytest.approx(4.0 * math.sqrt(c), rel=1e-6)
    assert shift.delta == pytest.approx(shift.first_order, rel=1e-2)
    assert shift.delta_c_truncated


def test_first_order_shift_vanishes_for_mkdv():
    shift = predicted_shift(build_params(pure_power(3), 0.01))
    assert abs(shift.first_order) < 1e-6


def test_window_is_enforced(kdv_params):
    x = np.linspace(-5.0, 5.0, 11)
    with pytest.raises(WindowExceeded):
        evaluate_v(kdv_params, 1.01 * kdv_params.T_c, x)
    assert evaluate_v(kdv_params, 1.01 * kdv_params.T_c, x, enforce_window=False).shape == (11,)


def test_time_reversal_symmetry(kdv_params):
    x = np.linspace(-30.0, 30.0, 301)
    t = 0.4 * kdv_params.T_c
    forward = evaluate_v(kdv_params, t, x)
    backward = evaluate_v(kdv_params, -t, -x)
    assert np.allclose(forward, backward, atol=1e-9)


def test_two_bumps_at_the_window_edge(kdv_params):
    t = kdv_params.T_c
    x = np.linspace(-40.0, 40.0, 801)
    v = evaluate_v(kdv_params, t, x)
    # the small soliton sits near x = -(1 - c) t, the large one near the origin
    assert v[np.argmin(np.abs(x))] == pytest.approx(1.5, abs=0.05)
    assert np.max(v) < 1.6


def test_defect_norms_and_time_derivative(kdv_params):
    result = defect(kdv_params, 0.3 * kdv_params.T_c)
    assert set(result.norms) == {"L2_S", "L2_Sx", "L2_Sxx"}
    assert all(np.isfinite(value) for value in result.norms.values())
    assert result.time_derivative_error < FD_TOLERANCE


def test_correction_reduces_the_defect(kdv):
    c = 0.01
    corrected = defect(build_params(kdv, c), 0.0, cross_check=False)
    bare = defect(build_params(kdv, c, truncation=()), 0.0, cross_check=False)
    assert corrected.norms["L2_S"] < bare.norms["L2_S"]


def test_endpoint_recomposition_is_symmetric(kdv_params):
    ahead = endpoint_recomposition(kdv_params, 1)
    behind = endpoint_recomposition(kdv_params, -1)
    assert ahead.closeness == pytest.approx(behind.closeness, rel=1e-6)
    assert ahead.q_shift == pytest.approx(-behind.q_shift)
    with pytest.raises(ValueError):
        endpoint_recomposition(kdv_params, 0)


def test_physical_shift_from_normalized(kdv):
    physical = build_physical(kdv, 4.0, 0.04)
    # 4 sqrt(c2 / c1) / sqrt(c1)
    assert physical.shifts().first_order == pytest.approx(0.2, rel=1e-6)
    assert physical.window == pytest.approx(4.0**-1.5 * half_window(0.01))


def test_physical_evaluate_rescales_amplitude(kdv):
    physical = build_physical(kdv, 4.0, 0.04)
    x = np.linspace(-3.0, 3.0, 13)
    expected = 4.0 * evaluate_v(physical.params, 0.0, 2.0 * x)
    assert np.allclose(physical.evaluate(0.0, x), expected)


def test_rescale_to_checks_the_speed_ratio(kdv_params):
    with pytest.raises(ValueError):
        rescale_to(1.0, 0.2, kdv_params)
    assert rescale_to(2.0, 0.1, kdv_params).c1 == 2.0


def test_defect_on_explicit_grid(kdv_params):
    grid = UniformGrid(half_width=200.0, spacing=0.05)
    result = defect(kdv_params, 0.0, grid=grid, cross_check=False)
    assert result.grid is grid
    assert result.S.shape == grid.x.shape
