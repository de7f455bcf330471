"""Command-line interface for the gKdV collision lab.

    gkdvlab <profile|omega|approx|collide|sweep> --config <path> [--out <dir>] [--verify]

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 acceptance failure.
Artifacts are staged; config and numerical errors leave no output behind.
"""

from __future__ import annotations

import argparse
import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, List

import numpy as np
from dotenv import load_dotenv

from shared.solitons.approx_solution import (
    build_params,
    defect,
    endpoint_recomposition,
    modulated_closeness,
    predicted_shift,
)
from shared.solitons.errors import AcceptanceFailure, ConfigError, GkdvLabError
from shared.solitons.linearized_operator import (
    build_operator,
    coercivity_constant,
    ground_eigenvalue,
)
from shared.solitons.omega_solver import shift_coefficient
from shared.solitons.soliton_profile import (
    SolitonProfile,
    build_profile,
    decay_envelope_constant,
    first_integral_residual,
    ode_residual,
    power_identity_residual,
)

from .artifacts import ArtifactWriter
from .certificates import K_MAX, NOISE_FLOOR, CertificateTable, residual_certificates
from .collision_lab import (
    TRACK_COLUMNS,
    CollisionConfig,
    CollisionReport,
    run_collision,
    symmetric_run,
)
from .config import ExperimentConfig, load_config
from .monotonicity import COMBINATIONS, monotonicity_diagnostics
from .report_storage import ReportStore
from .sweep import run_sweep, shift_failures

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3

PROFILE_TOLERANCES = {
    "first_integral_residual": 1e-10,
    "ode_residual": 1e-8,
    "power_identity_residual": 1e-6,
}
POWER_IDENTITY_ORDERS = (1, 2, 3)
SLOPE_TOLERANCE = 0.15
INTEGRABLE_SPEED_TOLERANCE = 1e-5

Command = Callable[[ExperimentConfig, ArtifactWriter, bool], Dict[str, Any]]


def _accept(experiment: ExperimentConfig, failures: List[str]) -> None:
    if failures and experiment.get("run", "acceptance", True):
        raise AcceptanceFailure("; ".join(failures))
    for failure in failures:
        _LOGGER.warning("acceptance check skipped: %s", failure)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------
def _profile_summary(profile: SolitonProfile) -> Dict[str, Any]:
    return {
        "c": profile.c,
        "sign": profile.sign,
        "amplitude": profile.amplitude,
        **profile.functionals(),
        "first_integral_residual": first_integral_residual(profile),
        "ode_residual": ode_residual(profile),
        "power_identity_residual": max(
            power_identity_residual(profile, k) for k in POWER_IDENTITY_ORDERS
        ),
        "decay_envelope_constant": decay_envelope_constant(profile),
    }


def cmd_profile(
    experiment: ExperimentConfig, writer: ArtifactWriter, verify: bool
) -> Dict[str, Any]:
    model = experiment.model
    profiles = {
        "c1": build_profile(model, experiment.c1),
        "c2": build_profile(model, experiment.c2, experiment.sign),
    }
    summary = {name: _profile_summary(profile) for name, profile in profiles.items()}
    for name, profile in profiles.items():
        writer.write_csv(
            f"profile_{name}.csv",
            ["x", "Q", "dQ", "d2Q"],
            zip(profile.x, profile.values, profile.d1, profile.d2),
        )
    writer.write_json("profile.json", {"model": model.describe(), "profiles": summary})
    failures = [
        f"{name}: {check} {item[check]:.3e} > {limit:g}"
        for name, item in summary.items()
        for check, limit in PROFILE_TOLERANCES.items()
        if item[check] > limit
    ]
    _accept(experiment, failures)
    return {"amplitude_c1": summary["c1"]["amplitude"], "mass_c1": summary["c1"]["mass"]}


def cmd_omega(
    experiment: ExperimentConfig, writer: ArtifactWriter, verify: bool
) -> Dict[str, Any]:
    model = experiment.model
    coefficient = shift_coefficient(model, experiment.c1, 1)
    op = build_operator(build_profile(model.rescaled(experiment.c1), 1.0))
    ground = ground_eigenvalue(op)
    seed = experiment.get("run", "seed", 0)
    payload = {
        "model": model.describe(),
        "c1": experiment.c1,
        "a10": coefficient.a10,
        "a10_omega": coefficient.a10_omega,
        "b10": coefficient.b10,
        "delta": coefficient.delta,
        "delta1": coefficient.delta1,
        "relative_gap": coefficient.relative_gap,
        "diagnostics": coefficient.solution.diagnostics,
        "lambda0": ground.lambda0,
        "next_eigenvalue": ground.next_eigenvalue,
        "coercivity": coercivity_constant(op, seed=seed),
    }
    solution = coefficient.solution
    writer.write_csv(
        "omega.csv",
        ["x", "A", "B_bar", "B"],
        zip(solution.x, solution.A, solution.B_bar, solution.B),
    )
    writer.write_json("omega.json", payload)
    failures = []
    if not coefficient.routes_agree:
        failures.append(f"a10 routes differ by {coefficient.relative_gap:.3e}")
    _accept(experiment, failures)
    return {"a10": coefficient.a10, "delta1": coefficient.delta1, "b10": coefficient.b10}


def cmd_approx(
    experiment: ExperimentConfig, writer: ArtifactWriter, verify: bool
) -> Dict[str, Any]:
    c1 = experiment.c1
    params = build_params(
        experiment.model.rescaled(c1),
        experiment.c2 / c1,
        experiment.truncation,
        experiment.sign,
    )
    seed = experiment.get("run", "seed", 0)
    fractions = experiment.get("approx", "defect_times", [-1.0, -0.5, 0.0, 0.5, 1.0])
    rows = []
    for fraction in fractions:
        t = fraction * params.T_c
        measured = defect(params, t, seed=seed)
        rows.append([t, *measured.norms.values(), measured.time_derivative_error])
    shift = predicted_shift(params)
    ends = {
        "plus": endpoint_recomposition(params, 1),
        "minus": endpoint_recomposition(params, -1),
    }
    y0, distance = modulated_closeness(params, params.T_c)
    writer.write_csv(
        "defect.csv", ["t", "L2_S", "L2_Sx", "L2_Sxx", "time_derivative_error"], rows
    )
    writer.write_json(
        "approx.json",
        {
            "params": params.describe(),
            "shift": asdict(shift),
            "recomposition": {name: asdict(item) for name, item in ends.items()},
            "modulated_closeness": {"y0": y0, "distance": distance},
        },
    )
    gap = abs(ends["plus"].closeness - ends["minus"].closeness)
    scale = max(ends["plus"].closeness, 1e-300)
    failures = []
    if gap > 1e-6 * scale + 1e-12:
        failures.append(f"endpoint closeness is not symmetric (gap {gap:.3e})")
    _accept(experiment, failures)
    return {"Delta": shift.delta, "first_order": shift.first_order, "T_c": params.T_c}


def _collision_failures(
    config: CollisionConfig, report: CollisionReport, table: CertificateTable
) -> List[str]:
    failures = [f"certificate {name} failed" for name in table.failures()]
    if config.initial == "exact":
        for name, nominal, measured in (
            ("c1", config.c1, report.c1_plus),
            ("c2", config.c2, report.c2_plus),
        ):
            if abs(measured - nominal) > INTEGRABLE_SPEED_TOLERANCE:
                failures.append(f"{name}+ = {measured:.8g} differs from {nominal:g}")
        if report.M_plus > NOISE_FLOOR:
            failures.append(f"M+ = {report.M_plus:.3e} above the elastic noise floor")
    return failures


def cmd_collide(
    experiment: ExperimentConfig, writer: ArtifactWriter, verify: bool
) -> Dict[str, Any]:
    config = CollisionConfig.from_experiment(experiment, verify=verify)
    report, track = run_collision(config)
    noise = experiment.get("collision", "noise_floor", NOISE_FLOOR)
    k_max = experiment.get("collision", "certificate_constant", K_MAX)
    table = residual_certificates(report, track, noise_floor=noise, k_max=k_max)
    series = monotonicity_diagnostics(
        track.frames, (config.c1, config.c2), config.interaction_time
    )
    report.fitted_constants.update(
        {f"monotonicity_{name}": value for name, value in series.constants.items()}
    )
    payload = report.to_payload()
    payload["certificates"] = table.to_payload()
    if verify and config.initial == "dressed":
        payload["symmetry"] = asdict(symmetric_run(config))

    writer.write_json("report.json", payload)
    writer.write_json("manifest.json", report.resolution)
    writer.write_csv("track.csv", TRACK_COLUMNS, track.rows())
    writer.write_csv(
        "certificates.csv",
        CertificateTable.COLUMNS,
        (item.as_row() for item in table.certificates),
    )
    writer.write_csv("monotonicity.csv", ["t", *COMBINATIONS], series.rows())
    stride = experiment.get("output", "snapshot_stride", 0)
    if stride:
        frames = [(state.t, state.u) for state, _ in track.frames[::stride]]
        writer.write_snapshots("snapshots.npz", frames)

    _accept(experiment, _collision_failures(config, report, table))
    _record(experiment, "collide", experiment.hash(), payload)
    return report.summary()


def cmd_sweep(
    experiment: ExperimentConfig, writer: ArtifactWriter, verify: bool
) -> Dict[str, Any]:
    workers = 1 if verify else None
    result = run_sweep(experiment, workers=workers, verify=verify)
    summary = result.summary()
    writer.write_csv("sweep.csv", result.columns, result.table())
    writer.write_json("sweep.json", {"config": experiment.canonical(), **summary})

    failures = []
    expected = experiment.get("sweep", "expected_slope")
    if expected is not None:
        tolerance = experiment.get("sweep", "slope_tolerance", SLOPE_TOLERANCE)
        if result.exponent is None:
            failures.append("an exponent check needs at least three sweep points")
        elif not result.exponent.within(expected, tolerance):
            failures.append(
                f"slope {result.exponent.slope:.4f} outside {expected:g} +- {tolerance:g}"
            )
    if result.kind == "shift":
        tolerance = experiment.get("sweep", "slope_tolerance", SLOPE_TOLERANCE)
        failures.extend(shift_failures(result, experiment.model.p, tolerance))
    _accept(experiment, failures)
    for row in result.rows:
        speed = row["c2"] if "c2" in row else row["c"] * experiment.c1
        run_payload = {
            "config": {
                "c1": experiment.c1,
                "c2": speed,
                "model": experiment.model.describe(),
            },
            **row,
        }
        run_id = experiment.with_speeds(speed).hash()
        _record(experiment, f"sweep-{result.kind}", run_id, run_payload)
    return summary


COMMANDS: Dict[str, Command] = {
    "profile": cmd_profile,
    "omega": cmd_omega,
    "approx": cmd_approx,
    "collide": cmd_collide,
    "sweep": cmd_sweep,
}


def _record(
    experiment: ExperimentConfig, command: str, run_id: str, payload: Dict[str, Any]
) -> None:
    if not experiment.get("output", "record", False):
        return
    store = ReportStore(experiment.get("output", "database_url"))
    try:
        store.upsert_report(run_id, command, payload)
    finally:
        store.close()


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gkdvlab", description="gKdV two-soliton collision lab"
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Pipeline to run")
    parser.add_argument("--config", required=True, type=Path, help="Experiment TOML file")
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory (default: [output] directory or gkdvlab_out)",
    )
    parser.add_argument(
        "--verify",
        action="store_true",
        help="Verification mode: single worker, step calibration, no wall-clock fields",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging threshold (default: WARNING)",
    )
    return parser


def _format(summary: Dict[str, Any]) -> str:
    parts = []
    for key, value in summary.items():
        if isinstance(value, float) and math.isfinite(value):
            parts.append(f"{key}={value:.6g}")
        elif isinstance(value, (int, str, np.integer)):
            parts.append(f"{key}={value}")
    return " ".join(parts)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    load_dotenv()

    rejected: AcceptanceFailure | None = None
    try:
        experiment = load_config(args.config)
        out_dir = args.out or experiment.output_dir
        with ArtifactWriter(out_dir / args.command, experiment.hash()) as writer:
            # failed acceptance checks still commit the artifacts they judged
            try:
                summary = COMMANDS[args.command](experiment, writer, args.verify)
            except AcceptanceFailure as exc:
                rejected = exc
    except ConfigError as exc:
        _LOGGER.error("config error: %s", exc)
        print(f"[error] {exc}")
        return EXIT_CONFIG
    except GkdvLabError as exc:
        _LOGGER.error("numerical failure: %s", exc)
        print(f"[error] {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    except ValueError as exc:
        _LOGGER.error("invalid parameters: %s", exc)
        print(f"[error] {exc}")
        return EXIT_CONFIG

    if rejected is not None:
        _LOGGER.error("acceptance failure: %s", rejected)
        print(f"[fail] {rejected} -> {out_dir / args.command}")
        return EXIT_ACCEPTANCE
    print(f"{args.command}: {_format(summary)} -> {out_dir / args.command}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
