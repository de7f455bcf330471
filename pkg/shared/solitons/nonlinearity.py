"""Nonlinearity class f(u) = u^p + f1(u) with its derivatives and antiderivative.

Every other module reads f, f', f'', f''' and F(s) = int_0^s f through a
:class:`NonlinearityModel`. Perturbations are finite monomial sums by default;
a user-defined smooth perturbation may be supplied together with its own
antiderivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Tuple

import numpy as np

ArrayLike = Any
ScalarFn = Callable[[np.ndarray], np.ndarray]

SUPPORTED_POWERS = (2, 3, 4)
_SMALLNESS_PROBES = np.geomspace(1e-1, 1e-8, 15)


@dataclass(frozen=True)
class Monomial:
    """Single perturbation term ``coefficient * u**exponent``."""

    coefficient: float
    exponent: int

    def derivative(self, s: np.ndarray, order: int) -> np.ndarray:
        k = self.exponent
        if order > k:
            return np.zeros_like(s)
        factor = math.factorial(k) // math.factorial(k - order)
        return self.coefficient * factor * np.power(s, k - order)

    def antiderivative(self, s: np.ndarray) -> np.ndarray:
        k = self.exponent
        return self.coefficient * np.power(s, k + 1) / (k + 1)


@dataclass(frozen=True)
class CustomPerturbation:
    """User-supplied smooth f1 with derivatives up to order three and F1."""

    f1: ScalarFn
    df1: ScalarFn
    d2f1: ScalarFn
    d3f1: ScalarFn
    F1: ScalarFn
    label: str = "custom"

    def derivative(self, s: np.ndarray, order: int) -> np.ndarray:
        fn = (self.f1, self.df1, self.d2f1, self.d3f1)[order]
        return np.asarray(fn(s), dtype=float)

    def antiderivative(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(self.F1(s), dtype=float)

    def rescaled(self, c1: float, p: int) -> "CustomPerturbation":
        lam = c1 ** (1.0 / (p - 1))

        def _scaled(order: int) -> ScalarFn:
            fn = (self.f1, self.df1, self.d2f1, self.d3f1)[order]
            weight = c1 ** ((order - p) / (p - 1))
            return lambda s: weight * np.asarray(fn(lam * np.asarray(s)), dtype=float)

        f_weight = c1 ** (-(p + 1) / (p - 1))
        return CustomPerturbation(
            f1=_scaled(0),
            df1=_scaled(1),
            d2f1=_scaled(2),
            d3f1=_scaled(3),
            F1=lambda s: f_weight
            * np.asarray(self.F1(lam * np.asarray(s)), dtype=float),
            label=f"{self.label}@c1={c1:g}",
        )


@dataclass(frozen=True)
class NonlinearityModel:
    """f(u) = u^p + sum of monomials (+ optional custom perturbation)."""

    p: int
    monomials: Tuple[Monomial, ...] = field(default_factory=tuple)
    custom: CustomPerturbation | None = None

    def __post_init__(self) -> None:
        if self.p not in SUPPORTED_POWERS:
            raise ValueError(f"p must be one of {SUPPORTED_POWERS}, got {self.p!r}")
        normalized = tuple(
            term if isinstance(term, Monomial) else Monomial(float(term[0]), int(term[1]))
            for term in self.monomials
        )
        for term in normalized:
            if int(term.exponent) != term.exponent or term.exponent <= self.p:
                raise ValueError(
                    f"perturbation exponent must be an integer > p={self.p}, "
                    f"got {term.exponent!r}"
                )
        object.__setattr__(self, "monomials", normalized)
        if self.custom is not None and not self.perturbation_is_small():
            raise ValueError("custom perturbation does not satisfy f1(u)/u^p -> 0")

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------
    @classmethod
    def from_config(cls, section: Dict[str, Any]) -> "NonlinearityModel":
        """Build a model from ``{p = <int>, monomials = [[coeff, exponent], ...]}``."""

        terms = tuple(
            Monomial(float(coeff), int(exponent))
            for coeff, exponent in section.get("monomials", [])
        )
        return cls(p=int(section["p"]), monomials=terms)

    @property
    def is_pure(self) -> bool:
        return not self.monomials and self.custom is None

    def describe(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "p": self.p,
            "monomials": [[m.coefficient, m.exponent] for m in self.monomials],
        }
        if self.custom is not None:
            payload["custom"] = self.custom.label
        return payload

    # ------------------------------------------------------------------
    # Evaluators
    # ------------------------------------------------------------------
    def eval(
        self, s: ArrayLike, order: int = 0, antiderivative: bool = False
    ) -> ArrayLike:
        """Return f^(order)(s), or F(s) when ``antiderivative`` is set."""

        if order not in (0, 1, 2, 3):
            raise ValueError(f"unsupported derivative order {order!r}")
        if antiderivative and order != 0:
            raise ValueError("antiderivative is only available at order 0")
        values = np.asarray(s, dtype=float)
        if antiderivative:
            out = np.power(values, self.p + 1) / (self.p + 1)
            for term in self.monomials:
                out = out + term.antiderivative(values)
            if self.custom is not None:
                out = out + self.custom.antiderivative(values)
        else:
            out = _power_derivative(values, self.p, order)
            for term in self.monomials:
                out = out + term.derivative(values, order)
            if self.custom is not None:
                out = out + self.custom.derivative(values, order)
        return out if np.ndim(s) else float(out)

    def f(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s, 0)

    def df(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s, 1)

    def d2f(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s, 2)

    def d3f(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s, 3)

    def F(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s, 0, antiderivative=True)

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------
    def perturbation(self, s: ArrayLike) -> np.ndarray:
        """f1(s) alone."""

        values = np.asarray(s, dtype=float)
        return np.asarray(self.eval(values, 0), dtype=float) - np.power(values, self.p)

    def perturbation_is_small(self, tolerance: float = 1e-6) -> bool:
        """Check f1(u)/u^p -> 0 on a geometric sequence of small u (both signs)."""

        for sign in (1.0, -1.0):
            probes = sign * _SMALLNESS_PROBES
            ratios = np.abs(self.perturbation(probes) / np.power(probes, self.p))
            if not np.all(np.isfinite(ratios)) or ratios[-1] > tolerance:
                return False
            if np.any(np.diff(ratios[-5:]) > tolerance):
                return False
        return True

    def rescaled(self, c1: float) -> "NonlinearityModel":
        """Nonlinearity c1^{-p/(p-1)} f(c1^{1/(p-1)} u) of the speed-c1 frame."""

        if c1 <= 0:
            raise ValueError("rescaling speed must be positive")
        p = self.p
        terms = tuple(
            Monomial(m.coefficient * c1 ** ((m.exponent - p) / (p - 1)), m.exponent)
            for m in self.monomials
        )
        custom = self.custom.rescaled(c1, p) if self.custom is not None else None
        return NonlinearityModel(p=p, monomials=terms, custom=custom)


def _power_derivative(s: np.ndarray, p: int, order: int) -> np.ndarray:
    if order > p:
        return np.zeros_like(s)
    factor = math.factorial(p) // math.factorial(p - order)
    return factor * np.power(s, p - order)


def pure_power(p: int) -> NonlinearityModel:
    return NonlinearityModel(p=p)


__all__ = [
    "CustomPerturbation",
    "Monomial",
    "NonlinearityModel",
    "SUPPORTED_POWERS",
    "pure_power",
]
