"""Symmetric uniform grids and spectral calculus on their periodic embedding.

Grid functions here decay at both ends but may tend to different constants
(an odd function approaching +-b). Differentiation and cumulative integration
strip that jump with a smooth tanh ramp of width ``half_width / 40`` before
going to Fourier space, and add the ramp's exact contribution back.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft
from scipy.integrate import trapezoid


@dataclass(frozen=True)
class UniformGrid:
    """Grid x_i = h * (i - m), i = 0..2m, symmetric about the origin."""

    half_width: float
    spacing: float

    def __post_init__(self) -> None:
        if self.spacing <= 0 or self.half_width <= self.spacing:
            raise ValueError("grid needs 0 < spacing < half_width")

    @cached_property
    def half_count(self) -> int:
        return int(round(self.half_width / self.spacing))

    @property
    def size(self) -> int:
        return 2 * self.half_count + 1

    @property
    def mid(self) -> int:
        return self.half_count

    @property
    def length(self) -> float:
        return 2 * self.half_count * self.spacing

    @cached_property
    def x(self) -> np.ndarray:
        return self.spacing * (np.arange(self.size) - self.half_count)

    @cached_property
    def _wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * fft.rfftfreq(self.size - 1, d=self.spacing)

    @property
    def ramp_width(self) -> float:
        return self.x[-1] / 40.0

    def scaled(self, factor: float) -> "UniformGrid":
        """Grid with every abscissa multiplied by ``factor``."""

        return UniformGrid(self.half_count * self.spacing * factor, self.spacing * factor)

    def check(self, values: np.ndarray) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.size,):
            raise ValueError(
                f"grid function has shape {arr.shape}, expected ({self.size},)"
            )
        return arr

    # ------------------------------------------------------------------
    # Calculus
    # ------------------------------------------------------------------
    def integrate(self, values: np.ndarray) -> float:
        return float(trapezoid(self.check(values), dx=self.spacing))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.integrate(np.asarray(u) * np.asarray(v))

    def norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.inner(values, values)))

    def h1_norm(self, values: np.ndarray) -> float:
        dv = self.derivative(values)
        return float(np.sqrt(self.integrate(dv * dv + np.asarray(values) ** 2)))

    def derivative(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        """Spectral derivative of a grid function flat at both ends."""

        v = self.check(values)
        jump = v[-1] - v[0]
        ramp = self._ramp(order)
        periodic = v - jump * self._ramp(0)
        coeffs = fft.rfft(periodic[:-1])
        symbol = (1j * self._wavenumbers) ** order
        if order % 2 == 1 and (self.size - 1) % 2 == 0:
            symbol[-1] = 0.0
        inner = fft.irfft(coeffs * symbol, n=self.size - 1)
        out = np.append(inner, inner[0])
        return out + jump * ramp

    def cumulative_integral(self, values: np.ndarray) -> np.ndarray:
        """I(x) = int_{-L}^{x} v, spectrally accurate for decaying v."""

        v = self.check(values)
        total = float(self.spacing * np.sum(v[:-1]))
        bump = self._ramp(1)
        remainder = v - total * bump
        coeffs = fft.rfft(remainder[:-1])
        k = self._wavenumbers
        anti = np.zeros_like(coeffs)
        anti[1:] = coeffs[1:] / (1j * k[1:])
        if (self.size - 1) % 2 == 0:
            anti[-1] = 0.0
        inner = fft.irfft(anti, n=self.size - 1)
        periodic = np.append(inner, inner[0])
        out = periodic - periodic[0] + total * (self._ramp(0) - self._ramp(0)[0])
        return out

    def integral_from_origin(self, values: np.ndarray) -> np.ndarray:
        """int_0^x v on the grid."""

        cumulative = self.cumulative_integral(values)
        return cumulative - cumulative[self.mid]

    # ------------------------------------------------------------------
    # Parity
    # ------------------------------------------------------------------
    def reflect(self, values: np.ndarray) -> np.ndarray:
        return self.check(values)[::-1]

    def even_part(self, values: np.ndarray) -> np.ndarray:
        v = self.check(values)
        return 0.5 * (v + v[::-1])

    def odd_part(self, values: np.ndarray) -> np.ndarray:
        v = self.check(values)
        return 0.5 * (v - v[::-1])

    def _ramp(self, order: int) -> np.ndarray:
        w = self.ramp_width
        t = np.tanh(self.x / w)
        s2 = 1.0 - t * t
        if order == 0:
            return 0.5 * (1.0 + t)
        if order == 1:
            return 0.5 * s2 / w
        if order == 2:
            return -s2 * t / w**2
        if order == 3:
            return (2 * s2 * t * t - s2 * s2) / w**3
        raise ValueError(f"unsupported derivative order {order!r}")


__all__ = ["UniformGrid"]
