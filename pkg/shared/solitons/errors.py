"""Exception hierarchy shared by the soliton libraries and the lab app."""

from __future__ import annotations


class GkdvLabError(Exception):
    """Base class for every failure raised by the collision lab."""


class ConfigError(GkdvLabError, ValueError):
    """Experiment configuration failed validation."""


class NoSolitaryWave(GkdvLabError):
    """No turning point exists below the search ceiling for the requested speed."""


class QuadratureFailure(GkdvLabError):
    """The profile quadrature lost positivity or failed to converge."""


class SingularSolve(GkdvLabError):
    """A parity-subspace factorization is singular or too ill-conditioned."""


class NotOrthogonal(SingularSolve):
    """Right-hand side has a component along the odd kernel direction Q'."""


class NonNegativeGroundState(GkdvLabError):
    """The smallest eigenvalue of L is not negative."""


class Degenerate(GkdvLabError):
    """The nondegeneracy pairing <Z0, Q> vanishes."""


class WindowExceeded(GkdvLabError):
    """Approximate solution requested outside its time window."""


class DerivativeMismatch(GkdvLabError):
    """Analytic and finite-difference time derivatives disagree."""


class BlowupDetected(GkdvLabError):
    """Field amplitude crossed the configured ceiling."""


class FitDiverged(GkdvLabError):
    """Soliton fit did not converge to an admissible (c, rho)."""


class Overlapping(GkdvLabError):
    """Fitting windows of two solitons intersect."""


class WindowContaminated(GkdvLabError):
    """Wrapped-around radiation entered a measurement window."""


class DegenerateFit(GkdvLabError):
    """Exponent fit input has too few or collinear points."""


class AcceptanceFailure(GkdvLabError):
    """A measured quantity failed its acceptance check."""


__all__ = [
    "AcceptanceFailure",
    "BlowupDetected",
    "ConfigError",
    "Degenerate",
    "DegenerateFit",
    "DerivativeMismatch",
    "FitDiverged",
    "GkdvLabError",
    "NoSolitaryWave",
    "NonNegativeGroundState",
    "NotOrthogonal",
    "Overlapping",
    "QuadratureFailure",
    "SingularSolve",
    "WindowContaminated",
    "WindowExceeded",
]
