"""Parameter sweeps over the small speed and log-log exponent fits."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from shared.solitons.approx_solution import (
    build_params,
    defect,
    endpoint_recomposition,
    predicted_shift,
)
from shared.solitons.errors import ConfigError, DegenerateFit
from shared.spectral.pde_integrator import exact_phase_shifts_p2

from .collision_lab import CollisionConfig, run_collision, stability_run
from .config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)

CONFIDENCE = 0.95

COLUMNS: Dict[str, List[str]] = {
    "defect": [
        "c",
        "L2_S",
        "L2_Sx",
        "L2_Sxx",
        "Delta",
        "first_order",
        "closeness_plus",
        "closeness_minus",
    ],
    "shift": ["c2", "delta1", "delta2", "predicted_delta1", "exact_delta1", "exact_delta2"],
    "collision": [
        "c2",
        "c1_plus",
        "c2_plus",
        "delta1",
        "delta2",
        "M_plus",
        "E_plus",
        "speed_gain",
        "speed_loss",
    ],
    "stability": ["c2", "epsilon", "sup_w_h1", "constant"],
}

DEFAULT_QUANTITY = {
    "defect": "L2_S",
    "shift": "delta1",
    "collision": "M_plus",
    "stability": "sup_w_h1",
}


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    points: int

    def within(self, expected: float, tolerance: float) -> bool:
        return abs(self.slope - expected) <= tolerance


def fit_exponent(
    pairs: Sequence[Tuple[float, float]], confidence: float = CONFIDENCE
) -> ExponentFit:
    """Least squares of log(value) on log(c) with a t-based confidence interval."""

    if len(pairs) < 3:
        raise DegenerateFit(f"need at least 3 points, got {len(pairs)}")
    c = np.asarray([item[0] for item in pairs], dtype=float)
    values = np.asarray([item[1] for item in pairs], dtype=float)
    if np.any(c <= 0) or np.any(values <= 0):
        raise DegenerateFit("exponent fits need positive abscissae and values")
    log_c = np.log(c)
    if np.ptp(log_c) == 0.0:
        raise DegenerateFit("all abscissae coincide")
    result = stats.linregress(log_c, np.log(values))
    stderr = float(result.stderr)
    spread = stats.t.ppf(0.5 + 0.5 * confidence, df=c.size - 2) * stderr
    return ExponentFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=stderr,
        ci_low=float(result.slope - spread),
        ci_high=float(result.slope + spread),
        points=int(c.size),
    )


def constant_spread(values: Sequence[float]) -> float:
    """max/min of the finite positive constants in a sweep (1 when uniform)."""

    usable = [v for v in values if v is not None and math.isfinite(v) and v > 0]
    if not usable:
        return math.nan
    return max(usable) / min(usable)


# ----------------------------------------------------------------------
# Tasks, one per small speed
# ----------------------------------------------------------------------
def _defect_row(experiment: ExperimentConfig, verify: bool) -> Dict[str, Any]:
    c1 = experiment.c1
    c = experiment.c2 / c1
    params = build_params(
        experiment.model.rescaled(c1), c, experiment.truncation, experiment.sign
    )
    fractions = experiment.get("approx", "defect_times", [-1.0, -0.5, 0.0, 0.5, 1.0])
    seed = experiment.get("run", "seed", 0)
    norms = {"L2_S": 0.0, "L2_Sx": 0.0, "L2_Sxx": 0.0}
    for fraction in fractions:
        measured = defect(params, fraction * params.T_c, seed=seed)
        for key in norms:
            norms[key] = max(norms[key], measured.norms[key])
    shift = predicted_shift(params)
    return {
        "c": c,
        **norms,
        "Delta": shift.delta,
        "first_order": shift.first_order,
        "closeness_plus": endpoint_recomposition(params, 1).closeness,
        "closeness_minus": endpoint_recomposition(params, -1).closeness,
    }


def _collision_row(experiment: ExperimentConfig, verify: bool) -> Dict[str, Any]:
    report, _ = run_collision(CollisionConfig.from_experiment(experiment, verify=verify))
    c1, c2 = experiment.c1, experiment.c2
    return {
        "c2": c2,
        "c1_plus": report.c1_plus,
        "c2_plus": report.c2_plus,
        "delta1": report.delta1,
        "delta2": report.delta2,
        "M_plus": report.M_plus,
        "E_plus": report.E_plus,
        "speed_gain": report.c1_plus / c1 - 1.0,
        "speed_loss": 1.0 - report.c2_plus / c2,
    }


def _shift_row(experiment: ExperimentConfig, verify: bool) -> Dict[str, Any]:
    config = CollisionConfig.from_experiment(experiment, verify=verify)
    report, _ = run_collision(config)
    c1, c2 = experiment.c1, experiment.c2
    params = build_params(experiment.model.rescaled(c1), c2 / c1, experiment.truncation)
    exact = (math.nan, math.nan)
    # pure mKdV with equal signs shares the KdV phase shifts
    if experiment.model.is_pure and experiment.model.p in (2, 3) and experiment.sign == 1:
        exact = exact_phase_shifts_p2(c1, c2)
    return {
        "c2": c2,
        "delta1": report.delta1,
        "delta2": report.delta2,
        "predicted_delta1": predicted_shift(params).first_order / math.sqrt(c1),
        "exact_delta1": exact[0],
        "exact_delta2": exact[1],
    }


def _stability_row(experiment: ExperimentConfig, verify: bool) -> Dict[str, Any]:
    config = CollisionConfig.from_experiment(experiment, verify=verify)
    result = stability_run(config, experiment.get("collision", "stability_epsilon"))
    return {
        "c2": experiment.c2,
        "epsilon": result.epsilon,
        "sup_w_h1": result.sup_w_h1,
        "constant": result.constant,
    }


TASKS: Dict[str, Callable[[ExperimentConfig, bool], Dict[str, Any]]] = {
    "defect": _defect_row,
    "shift": _shift_row,
    "collision": _collision_row,
    "stability": _stability_row,
}


def _run_task(job: Tuple[str, ExperimentConfig, bool]) -> Dict[str, Any]:
    kind, experiment, verify = job
    _LOGGER.info("sweep %s at c2=%g", kind, experiment.c2)
    return TASKS[kind](experiment, verify)


# ----------------------------------------------------------------------
# Sweep driver
# ----------------------------------------------------------------------
@dataclass
class SweepResult:
    kind: str
    rows: List[Dict[str, Any]]
    quantity: str
    exponent: ExponentFit | None

    @property
    def columns(self) -> List[str]:
        return COLUMNS[self.kind]

    def table(self) -> List[List[Any]]:
        return [[row[name] for name in self.columns] for row in self.rows]

    def summary(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "kind": self.kind,
            "quantity": self.quantity,
            "runs": len(self.rows),
        }
        if self.exponent is not None:
            payload["exponent"] = asdict(self.exponent)
        if self.kind == "stability":
            payload["constant_spread"] = constant_spread([row["constant"] for row in self.rows])
        return payload


def run_sweep(
    experiment: ExperimentConfig, workers: int | None = None, verify: bool = False
) -> SweepResult:
    """Run one task per ``[sweep] c2`` value and fit the configured exponent.

    Rows are sorted by speed before fitting, so the result does not depend on
    worker scheduling. ``workers = 1`` runs in-process.
    """

    sweep = experiment.section("sweep")
    kind = sweep.get("kind", "defect")
    quantity = sweep.get("quantity", DEFAULT_QUANTITY[kind])
    if quantity not in COLUMNS[kind]:
        raise ConfigError(f"{quantity!r} is not a {kind} sweep column")
    speeds = sorted(sweep.get("c2", [experiment.c2]))
    workers = workers or sweep.get("workers", 1)
    jobs = [(kind, experiment.with_speeds(c2), verify) for c2 in speeds]

    if workers > 1 and len(jobs) > 1:
        with Pool(processes=min(workers, len(jobs))) as pool:
            rows = pool.map(_run_task, jobs)
    else:
        rows = [_run_task(job) for job in jobs]
    key = COLUMNS[kind][0]
    rows.sort(key=lambda row: row[key])

    pairs = [(row[key], abs(row[quantity])) for row in rows]
    exponent = None
    if len(pairs) >= 3:
        exponent = fit_exponent(pairs)
        _LOGGER.info(
            "%s slope in %s: %.4f [%.4f, %.4f]",
            quantity,
            key,
            exponent.slope,
            exponent.ci_low,
            exponent.ci_high,
        )
    return SweepResult(kind=kind, rows=rows, quantity=quantity, exponent=exponent)


# ----------------------------------------------------------------------
# Shift acceptance
# ----------------------------------------------------------------------
SHIFT_LAW_TOLERANCE = 0.2
EXACT_SHIFT_TOLERANCE = 0.05
ZERO_SHIFT_LEVEL = 1e-4


def shift_failures(result: SweepResult, p: int, slope_tolerance: float) -> List[str]:
    """Compare measured fast-wave shifts with the first-order law and the exact shifts.

    For p = 2 the measured shift must be within 20% of the first-order
    prediction. Where an exact shift is known it must agree to 5%. When the
    first-order coefficient vanishes (pure p = 3) the shift has no c2^0
    part, so |delta1| must decay in c2 at least like the correction order
    2/(p-1) - 1/2.
    """

    failures: List[str] = []
    for row in result.rows:
        c2, measured, predicted, exact = (
            row["c2"],
            row["delta1"],
            row["predicted_delta1"],
            row["exact_delta1"],
        )
        if p == 2 and abs(measured - predicted) > SHIFT_LAW_TOLERANCE * abs(predicted):
            failures.append(
                f"c2={c2:g}: delta1 {measured:.4e} off the shift law {predicted:.4e}"
            )
        off_exact = abs(measured - exact) > EXACT_SHIFT_TOLERANCE * abs(exact)
        if math.isfinite(exact) and off_exact:
            failures.append(
                f"c2={c2:g}: delta1 {measured:.4e} off the exact shift {exact:.4e}"
            )

    leading = [abs(row["predicted_delta1"]) for row in result.rows]
    if leading and max(leading) <= ZERO_SHIFT_LEVEL:
        order = 2.0 / (p - 1) - 0.5
        pairs = [(row["c2"], abs(row["delta1"])) for row in result.rows]
        if len(pairs) < 3:
            failures.append("the zero leading order check needs at least three sweep points")
        else:
            try:
                decay = fit_exponent(pairs)
            except DegenerateFit as exc:
                return failures + [f"zero leading order: {exc}"]
            if decay.slope < order - slope_tolerance:
                failures.append(
                    f"zero leading order: |delta1| slope {decay.slope:.4f} "
                    f"below {order:g} - {slope_tolerance:g}"
                )
    return failures


__all__ = [
    "COLUMNS",
    "ExponentFit",
    "SweepResult",
    "constant_spread",
    "fit_exponent",
    "run_sweep",
    "shift_failures",
]
