from __future__ import annotations

import math

import numpy as np
import pytest

from shared.solitons.errors import NoSolitaryWave
from shared.solitons.nonlinearity import NonlinearityModel, pure_power
from shared.solitons.soliton_profile import (
    amplitude,
    power_identity_residual,
    build_profile,
    c_derivatives,
    decay_envelope_constant,
    first_integral_residual,
    ode_residual,
    rescale_profile,
)


def test_kdv_profile_peak_and_functionals(unit_profiles):
    profile = unit_profiles[2]
    assert profile.amplitude == pytest.approx(1.5)
    assert profile.evaluate(np.array([0.0]))[0] == pytest.approx(1.5)
    assert profile.mass == pytest.approx(6.0, rel=1e-8)
    assert profile.integral == pytest.approx(6.0, rel=1e-8)
    # E(Q_c) = -3 c M / 10 for p = 2
    assert profile.energy == pytest.approx(-1.8, rel=1e-8)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_closed_form_amplitude(p):
    c = 0.3
    expected = ((p + 1) * c / 2.0) ** (1.0 / (p - 1))
    assert amplitude(pure_power(p), c) == pytest.approx(expected)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_identities_hold_for_pure_powers(unit_profiles, p):
    profile = unit_profiles[p]
    assert first_integral_residual(profile) <= 1e-10
    assert ode_residual(profile) <= 1e-8
    for k in (1, 2, 3):
        assert power_identity_residual(profile, k) < 1e-6


def test_mass_scales_like_c_to_three_halves(kdv):
    for c in (0.01, 0.25, 4.0):
        assert build_profile(kdv, c).mass == pytest.approx(6.0 * c**1.5, rel=1e-8)


def test_numerical_route_matches_closed_form():
    # a zero monomial forces the quadrature path
    quadrature = build_profile(NonlinearityModel(p=2, monomials=((0.0, 4),)), 1.0)
    closed = build_profile(pure_power(2), 1.0)
    assert quadrature.amplitude == pytest.approx(1.5, rel=1e-12)
    assert np.max(np.abs(quadrature.values - closed.values)) < 1e-7
    assert np.max(np.abs(quadrature.d1 - closed.d1)) < 1e-7
    assert quadrature.mass == pytest.approx(closed.mass, rel=1e-7)


def test_perturbed_profile_satisfies_first_integral():
    model = NonlinearityModel(p=2, monomials=((0.05, 4),))
    profile = build_profile(model, 0.5)
    assert first_integral_residual(profile) <= 1e-10
    assert ode_residual(profile) <= 1e-8
    for k in (1, 2, 3):
        assert power_identity_residual(profile, k) < 1e-6
    assert profile.values[profile.grid.mid] == pytest.approx(profile.amplitude)
    assert np.allclose(profile.values, profile.values[::-1])


def test_negative_profile_for_mkdv():
    profile = build_profile(pure_power(3), 1.0, sign=-1)
    assert profile.amplitude == pytest.approx(-math.sqrt(2.0))
    assert np.all(profile.values <= 0.0)


def test_negative_profile_requires_cubic():
    with pytest.raises(ValueError, match="p = 3"):
        build_profile(pure_power(2), 1.0, sign=-1)


def test_missing_turning_point_raises():
    # c m^2 = 2F(m) has no positive root when f = u^2 - u^3 and c = 1
    model = NonlinearityModel(p=2, monomials=((-1.0, 3),))
    with pytest.raises(NoSolitaryWave):
        amplitude(model, 1.0)


def test_nonpositive_speed_rejected(kdv):
    with pytest.raises(ValueError):
        build_profile(kdv, 0.0)


def test_c_derivatives_kdv(kdv):
    derivs = c_derivatives(kdv, 1.0)
    assert derivs.d_integral == pytest.approx(3.0, rel=1e-6)
    assert derivs.d_mass == pytest.approx(9.0, rel=1e-6)
    assert derivs.stable
    assert derivs.lam.agreement < 1e-4


def test_mkdv_integral_is_speed_independent():
    derivs = c_derivatives(pure_power(3), 1.0, cross_check=False)
    assert abs(derivs.d_integral) < 1e-6


def test_rescale_profile_is_scale_closed_for_pure_powers(kdv):
    profile = build_profile(kdv, 4.0)
    rescaled = rescale_profile(profile, 4.0)
    assert rescaled.c == pytest.approx(1.0)
    reference = build_profile(kdv, 1.0).evaluate(rescaled.x)
    assert np.allclose(rescaled.values, reference, atol=1e-12)
    # int Q_c^2 = c1^{2/(p-1) - 1/2} int Q~^2
    assert profile.mass == pytest.approx(4.0**1.5 * rescaled.mass, rel=1e-10)


def test_phi_is_bounded_and_odd(unit_profiles):
    profile = unit_profiles[2]
    phi = profile.phi()
    assert np.all(np.abs(phi) < 1.0 + 1e-12)
    assert np.allclose(phi, -phi[::-1])
    # phi = -Q'/Q = tanh(x/2) for KdV
    assert np.allclose(phi, np.tanh(0.5 * profile.x), atol=1e-10)


def test_decay_envelope_constant_is_moderate(unit_profiles):
    assert 1.0 <= decay_envelope_constant(unit_profiles[3]) < 10.0
