from __future__ import annotations

import numpy as np
import pytest

from shared.solitons.nonlinearity import (
    CustomPerturbation,
    Monomial,
    NonlinearityModel,
    pure_power,
)


def _quintic(coefficient: float) -> CustomPerturbation:
    return CustomPerturbation(
        f1=lambda s: coefficient * s**5,
        df1=lambda s: 5 * coefficient * s**4,
        d2f1=lambda s: 20 * coefficient * s**3,
        d3f1=lambda s: 60 * coefficient * s**2,
        F1=lambda s: coefficient * s**6 / 6,
        label="quintic",
    )


def test_eval_examples():
    assert pure_power(2).eval(3.0) == pytest.approx(9.0)
    assert pure_power(2).F(2.0) == pytest.approx(8.0 / 3.0)
    perturbed = NonlinearityModel(p=3, monomials=((0.1, 5),))
    assert perturbed.eval(1.0, order=1) == pytest.approx(3.5)


def test_derivative_chain_for_perturbed_model():
    model = NonlinearityModel(p=2, monomials=((0.05, 4),))
    s = np.array([-0.7, 0.2, 1.3])
    assert np.allclose(model.f(s), s**2 + 0.05 * s**4)
    assert np.allclose(model.df(s), 2 * s + 0.2 * s**3)
    assert np.allclose(model.d2f(s), 2 + 0.6 * s**2)
    assert np.allclose(model.d3f(s), 1.2 * s)
    assert np.allclose(model.F(s), s**3 / 3 + 0.01 * s**5)


def test_scalar_and_array_inputs_keep_their_shape():
    model = pure_power(3)
    assert isinstance(model.f(2.0), float)
    assert model.f(np.ones(4)).shape == (4,)


@pytest.mark.parametrize("order", [-1, 4])
def test_eval_rejects_unsupported_order(order):
    with pytest.raises(ValueError):
        pure_power(2).eval(1.0, order=order)


def test_antiderivative_only_at_order_zero():
    with pytest.raises(ValueError):
        pure_power(2).eval(1.0, order=1, antiderivative=True)


@pytest.mark.parametrize("p", [1, 5])
def test_unsupported_power_is_rejected(p):
    with pytest.raises(ValueError):
        NonlinearityModel(p=p)


def test_perturbation_exponent_must_exceed_p():
    with pytest.raises(ValueError, match="exponent"):
        NonlinearityModel(p=3, monomials=((0.1, 3),))


def test_monomial_pairs_are_normalized():
    model = NonlinearityModel(p=2, monomials=((0.5, 3),))
    assert model.monomials == (Monomial(0.5, 3),)
    assert not model.is_pure
    assert pure_power(4).is_pure


def test_custom_perturbation_matches_monomial():
    custom = NonlinearityModel(p=3, custom=_quintic(0.1))
    monomial = NonlinearityModel(p=3, monomials=((0.1, 5),))
    s = np.linspace(-1.2, 1.2, 9)
    for order in range(4):
        assert np.allclose(custom.eval(s, order), monomial.eval(s, order))
    assert np.allclose(custom.F(s), monomial.F(s))
    assert custom.describe()["custom"] == "quintic"


def test_custom_perturbation_must_be_small():
    not_small = CustomPerturbation(
        f1=lambda s: s**3,
        df1=lambda s: 3 * s**2,
        d2f1=lambda s: 6 * s,
        d3f1=lambda s: 6 * np.ones_like(s),
        F1=lambda s: s**4 / 4,
    )
    with pytest.raises(ValueError, match="f1"):
        NonlinearityModel(p=3, custom=not_small)


def test_perturbation_is_small_for_monomials():
    assert NonlinearityModel(p=2, monomials=((3.0, 3),)).perturbation_is_small()


def test_rescaled_coefficients():
    model = NonlinearityModel(p=3, monomials=((0.1, 5),))
    rescaled = model.rescaled(4.0)
    assert rescaled.monomials[0].coefficient == pytest.approx(0.4)
    s = np.array([0.1, 0.3, -0.8])
    expected = 4.0 ** (-1.5) * model.f(2.0 * s)
    assert np.allclose(rescaled.f(s), expected)


def test_rescaled_custom_matches_rescaled_monomial():
    custom = NonlinearityModel(p=3, custom=_quintic(0.1)).rescaled(4.0)
    monomial = NonlinearityModel(p=3, monomials=((0.1, 5),)).rescaled(4.0)
    s = np.linspace(-1.0, 1.0, 7)
    for order in range(4):
        assert np.allclose(custom.eval(s, order), monomial.eval(s, order))
    assert np.allclose(custom.F(s), monomial.F(s))


def test_pure_power_is_scale_invariant():
    assert pure_power(2).rescaled(9.0) == pure_power(2)


def test_rescaled_rejects_nonpositive_speed():
    with pytest.raises(ValueError):
        pure_power(2).rescaled(0.0)


def test_describe_lists_monomials():
    model = NonlinearityModel(p=2, monomials=((0.05, 4),))
    assert model.describe() == {"p": 2, "monomials": [[0.05, 4]]}
