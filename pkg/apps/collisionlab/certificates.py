"""Pass/fail checks of a collision report against the post-collision bounds."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

from .collision_lab import CollisionReport, ModulationTrack

_LOGGER = logging.getLogger(__name__)

NOISE_FLOOR = 1e-8
K_MAX = 1e3


@dataclass(frozen=True)
class Certificate:
    name: str
    passed: bool
    constant: float | None
    detail: str
    informational: bool = False

    def as_row(self) -> List[Any]:
        return [self.name, self.passed, self.constant, self.detail, self.informational]


@dataclass
class CertificateTable:
    certificates: List[Certificate]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.certificates)

    def constants(self) -> Dict[str, float]:
        return {
            item.name: item.constant for item in self.certificates if item.constant is not None
        }

    def failures(self) -> List[str]:
        return [item.name for item in self.certificates if not item.passed]

    def to_payload(self) -> List[Dict[str, Any]]:
        return [asdict(item) for item in self.certificates]

    COLUMNS = ["name", "passed", "constant", "detail", "informational"]


def _two_sided(value: float, budget: float, noise: float) -> float | None:
    """Smallest K with budget / K <= value <= K budget; None when both sit in the noise."""

    if abs(value) <= noise and abs(budget) <= noise:
        return None
    if value <= 0.0 or budget <= 0.0:
        return math.inf
    return max(value / budget, budget / value)


def _stability(report: CollisionReport, p: int, k_max: float) -> Certificate:
    c1, c2 = report.config["c1"], report.config["c2"]
    scale = c1 ** (1.0 / (p - 1)) * (c2 / c1) ** (1.0 / (p - 1))
    constant = report.sup_w_h1 / scale
    return Certificate(
        name="stability",
        passed=constant <= k_max,
        constant=constant,
        detail=f"sup ||w||_H1 = {report.sup_w_h1:.3e} against c2^(1/(p-1)) = {scale:.3e}",
    )


def _sandwich(report: CollisionReport, noise: float) -> Certificate:
    c2 = report.config["c2"]
    middle = 2.0 * report.E_plus + c2 * report.M_plus
    lower = 0.5 * max(item.quadratic_lower for item in report.late)
    upper = min(item.quadratic_upper for item in report.late)
    passed = lower <= middle + noise and middle <= upper + noise
    return Certificate(
        name="sandwich",
        passed=passed,
        constant=None,
        detail=f"{lower:.3e} <= 2E+ + c2 M+ = {middle:.3e} <= {upper:.3e}",
    )


def _speed_gain(report: CollisionReport, noise: float, k_max: float) -> Certificate:
    c1, c2 = report.config["c1"], report.config["c2"]
    gain = report.c1_plus / c1 - 1.0
    budget = 2.0 * report.E_plus + c2 * report.M_plus
    constant = _two_sided(gain, budget, noise)
    return Certificate(
        name="speed_gain",
        passed=constant is None or constant <= k_max,
        constant=constant,
        detail=f"c1+/c1 - 1 = {gain:.3e}, 2E+ + c2 M+ = {budget:.3e}",
    )


def _speed_loss(report: CollisionReport, p: int, noise: float, k_max: float) -> Certificate:
    c1, c2 = report.config["c1"], report.config["c2"]
    loss = 1.0 - report.c2_plus / c2
    weight = (c2 / c1) ** (2.0 / (p - 1) - 0.5)
    budget = weight * (2.0 * report.E_plus + c1 * report.M_plus)
    constant = _two_sided(loss, budget, noise)
    return Certificate(
        name="speed_loss",
        passed=constant is None or constant <= k_max,
        constant=constant,
        detail=f"1 - c2+/c2 = {loss:.3e}, weighted 2E+ + c1 M+ = {budget:.3e}",
    )


def _sign(report: CollisionReport, noise: float) -> Certificate:
    c2 = report.config["c2"]
    value = 2.0 * report.E_plus + c2 * report.M_plus
    return Certificate(
        name="sign",
        passed=value >= -noise,
        constant=None,
        detail=f"2E+ + c2 M+ = {value:.3e}",
    )


def _bookkeeping(report: CollisionReport, noise: float) -> Certificate:
    closure = report.closure
    limits = {name: closure[f"{name}_tolerance"] + noise for name in ("mass", "energy")}
    return Certificate(
        name="bookkeeping",
        passed=all(closure[name] <= limit for name, limit in limits.items()),
        constant=None,
        detail=(
            f"|M_book - M_res| = {closure['mass']:.3e} <= {limits['mass']:.3e}, "
            f"|E_book - E_res| = {closure['energy']:.3e} <= {limits['energy']:.3e}"
        ),
    )


def _orthogonality(
    report: CollisionReport, track: ModulationTrack, noise: float
) -> Certificate:
    worst = max(track.orthogonality, default=0.0)
    detail = f"max |<eta, R_j>|, |<eta, (x - rho_j) R_j>| = {worst:.3e}"
    if not report.config.get("refine", False):
        # least-squares frames do not impose the conditions
        return Certificate(
            name="orthogonality",
            passed=True,
            constant=worst,
            detail=detail + " (least-squares fit)",
            informational=True,
        )
    p = int(report.config["model"]["p"])
    scale = max(1.0, ((p + 1) * report.config["c1"] / 2.0) ** (1.0 / (p - 1)))
    limit = noise * scale
    return Certificate(
        name="orthogonality",
        passed=worst <= limit,
        constant=worst,
        detail=f"{detail} <= {limit:.3e}",
    )


def residual_certificates(
    report: CollisionReport,
    track: ModulationTrack,
    noise_floor: float = NOISE_FLOOR,
    k_max: float = K_MAX,
) -> CertificateTable:
    """Post-collision bounds, bookkeeping closure and orthogonality for one run.

    Fitted constants are written back into ``report.fitted_constants``.
    """

    if not report.late:
        raise ValueError("report has no late-time residual samples")
    p = int(report.config["model"]["p"])
    table = CertificateTable(
        [
            _stability(report, p, k_max),
            _sandwich(report, noise_floor),
            _speed_gain(report, noise_floor, k_max),
            _speed_loss(report, p, noise_floor, k_max),
            _sign(report, noise_floor),
            _bookkeeping(report, noise_floor),
            _orthogonality(report, track, noise_floor),
        ]
    )
    report.fitted_constants.update(table.constants())
    for item in table.certificates:
        log = _LOGGER.info if item.passed else _LOGGER.warning
        log("certificate %s: %s (%s)", item.name, "pass" if item.passed else "FAIL", item.detail)
    return table


__all__ = [
    "Certificate",
    "CertificateTable",
    "K_MAX",
    "NOISE_FLOOR",
    "residual_certificates",
]
