"""Experiment configuration: TOML sections validated against a fixed schema.

One file describes one experiment. ``[run] preset = "<name>"`` starts from a
shipped preset and the file overrides it key by key. Environment variables
(``GKDVLAB_DB_URL``, ``GKDVLAB_OUTPUT_DIR``, ``GKDVLAB_WORKERS``) override the
output and worker settings; ``.env`` files are honoured by the CLI.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

from shared.solitons.errors import ConfigError
from shared.solitons.nonlinearity import NonlinearityModel

from .presets import get_preset

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

_LOGGER = logging.getLogger(__name__)

Validator = Callable[[str, Any], Any]

INITIAL_KINDS = ("dressed", "bare", "exact")
SWEEP_KINDS = ("defect", "shift", "collision", "stability")
DEFAULT_OUTPUT_DIR = "gkdvlab_out"


# ----------------------------------------------------------------------
# Field validators
# ----------------------------------------------------------------------
def _number(positive: bool = False, lower: float | None = None) -> Validator:
    def check(key: str, value: Any) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite")
        if positive and value <= 0:
            raise ConfigError(f"{key} must be positive")
        if lower is not None and value < lower:
            raise ConfigError(f"{key} must be at least {lower:g}")
        return value

    return check


def _integer(minimum: int = 0) -> Validator:
    def check(key: str, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        if value < minimum:
            raise ConfigError(f"{key} must be at least {minimum}")
        return value

    return check


def _boolean(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be true or false")
    return value


def _string(key: str, value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(f"{key} must be a non-empty string")
    return value.strip()


def _choice(options: Tuple[str, ...]) -> Validator:
    def check(key: str, value: Any) -> str:
        text = _string(key, value)
        if text not in options:
            raise ConfigError(f"{key} must be one of {', '.join(options)}")
        return text

    return check


def _sign(key: str, value: Any) -> int:
    if value not in (1, -1) or isinstance(value, bool):
        raise ConfigError(f"{key} must be +1 or -1")
    return int(value)


def _power(key: str, value: Any) -> int:
    if isinstance(value, bool) or value not in (2, 3, 4):
        raise ConfigError(f"{key} must be 2, 3 or 4")
    return int(value)


def _monomials(key: str, value: Any) -> List[List[float]]:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list of [coefficient, exponent] pairs")
    out = []
    for entry in value:
        if not isinstance(entry, list) or len(entry) != 2:
            raise ConfigError(f"{key} entries must be [coefficient, exponent]")
        coeff = _number()(f"{key} coefficient", entry[0])
        exponent = _integer(1)(f"{key} exponent", entry[1])
        out.append([coeff, exponent])
    return out


def _truncation(key: str, value: Any) -> List[List[int]]:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list of [k, l] indices")
    out = []
    for entry in value:
        if not isinstance(entry, list) or len(entry) != 2:
            raise ConfigError(f"{key} entries must be [k, l]")
        out.append([_integer(1)(f"{key} k", entry[0]), _integer(0)(f"{key} l", entry[1])])
    return out


def _speed_list(key: str, value: Any) -> List[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key} must be a non-empty list of speeds")
    return [_number(positive=True)(key, item) for item in value]


def _fractions(key: str, value: Any) -> List[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key} must be a non-empty list")
    out = [_number()(key, item) for item in value]
    if any(abs(item) > 1.0 for item in out):
        raise ConfigError(f"{key} entries must lie in [-1, 1]")
    return out


def _power_of_two(key: str, value: Any) -> int:
    n = _integer(16)(key, value)
    if n & (n - 1):
        raise ConfigError(f"{key} must be a power of two")
    return n


ALLOWED: Dict[str, Dict[str, Validator]] = {
    "run": {
        "preset": _string,
        "label": _string,
        "acceptance": _boolean,
        "seed": _integer(0),
    },
    "nonlinearity": {"p": _power, "monomials": _monomials},
    "speeds": {"c1": _number(positive=True), "c2": _number(positive=True), "sign": _sign},
    "approx": {"truncation": _truncation, "defect_times": _fractions},
    "grid": {"spacing_physical": _number(positive=True), "n_modes": _power_of_two},
    "integrator": {
        "dt": _number(positive=True),
        "ceiling": _number(positive=True),
        "stride": _integer(1),
        "calibrate": _boolean,
        "sponge_strength": _number(lower=0.0),
        "sponge_width": _number(positive=True),
    },
    "collision": {
        "initial": _choice(INITIAL_KINDS),
        "separation_physical": _number(positive=True),
        "t_end_physical": _number(positive=True),
        "pre_window": _number(positive=True),
        "post_window": _number(positive=True),
        "refine": _boolean,
        "late_samples": _integer(1),
        "contamination_limit": _number(positive=True),
        "stability_epsilon": _number(positive=True),
        "certificate_constant": _number(positive=True),
        "noise_floor": _number(positive=True),
        "monotonicity_frames": _integer(2),
    },
    "sweep": {
        "kind": _choice(SWEEP_KINDS),
        "c2": _speed_list,
        "workers": _integer(1),
        "quantity": _string,
        "expected_slope": _number(),
        "slope_tolerance": _number(positive=True),
    },
    "output": {
        "directory": _string,
        "record": _boolean,
        "database_url": _string,
        "snapshot_stride": _integer(0),
    },
}

REQUIRED = {"nonlinearity": ("p",), "speeds": ("c1", "c2")}


# ----------------------------------------------------------------------
# Loading
# ----------------------------------------------------------------------
def _validate_sections(raw: Any) -> Dict[str, Dict[str, Any]]:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table of sections")
    unknown = set(raw) - set(ALLOWED)
    if unknown:
        raise ConfigError(f"unexpected section(s): {', '.join(sorted(unknown))}")

    cleaned: Dict[str, Dict[str, Any]] = {}
    for name, section in raw.items():
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        allowed = ALLOWED[name]
        unknown = set(section) - set(allowed)
        if unknown:
            raise ConfigError(
                f"unexpected field(s) in [{name}]: {', '.join(sorted(unknown))}"
            )
        cleaned[name] = {
            key: allowed[key](f"{name}.{key}", value) for key, value in section.items()
        }
    for name, keys in REQUIRED.items():
        missing = [key for key in keys if key not in cleaned.get(name, {})]
        if missing:
            raise ConfigError(f"missing required field(s) in [{name}]: {', '.join(missing)}")

    speeds = cleaned["speeds"]
    if speeds["c2"] >= speeds["c1"]:
        raise ConfigError("speeds.c2 must be smaller than speeds.c1")
    if speeds.get("sign", 1) == -1 and cleaned["nonlinearity"]["p"] != 3:
        raise ConfigError("speeds.sign = -1 requires p = 3")
    for coeff, exponent in cleaned["nonlinearity"].get("monomials", []):
        if exponent <= cleaned["nonlinearity"]["p"]:
            raise ConfigError("nonlinearity.monomials exponents must exceed p")
    return cleaned


def _merge(base: Dict[str, Dict[str, Any]], override: Dict[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = copy.deepcopy(base)
    for name, section in override.items():
        if isinstance(section, dict):
            merged.setdefault(name, {}).update(section)
        else:
            merged[name] = section
    return merged


def _env_override(variable: str, fallback: str) -> str | None:
    raw = os.getenv(variable)
    if raw is None:
        return None
    if candidate := raw.strip():
        return candidate
    _LOGGER.warning("%s is empty (value: %r); defaulting to %s", variable, raw, fallback)
    return None


def _apply_environment(sections: Dict[str, Dict[str, Any]]) -> None:
    output = sections.setdefault("output", {})
    if url := _env_override("GKDVLAB_DB_URL", "the configured database"):
        output["database_url"] = url
    if directory := _env_override("GKDVLAB_OUTPUT_DIR", "the configured directory"):
        output["directory"] = directory
    if workers := _env_override("GKDVLAB_WORKERS", "the configured worker count"):
        try:
            count = int(workers)
        except ValueError:
            raise ConfigError(f"GKDVLAB_WORKERS must be an integer, got {workers!r}") from None
        sections.setdefault("sweep", {})["workers"] = _integer(1)("GKDVLAB_WORKERS", count)


def parse_config(raw: Dict[str, Any], use_environment: bool = True) -> "ExperimentConfig":
    """Validate a parsed TOML document (preset first, file keys on top)."""

    if not isinstance(raw, dict):
        raise ConfigError("config must be a table of sections")
    preset_name = raw.get("run", {}).get("preset") if isinstance(raw.get("run"), dict) else None
    base: Dict[str, Dict[str, Any]] = {}
    if preset_name is not None:
        try:
            base = get_preset(_string("run.preset", preset_name)).as_sections()
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    sections = _validate_sections(_merge(base, raw))
    if use_environment:
        _apply_environment(sections)
    return ExperimentConfig(sections=sections)


def load_config(path: str | Path, use_environment: bool = True) -> "ExperimentConfig":
    config_path = Path(path)
    try:
        with open(config_path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {config_path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {config_path}: {exc}") from None
    return parse_config(raw, use_environment)


# ----------------------------------------------------------------------
# Validated config
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentConfig:
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.sections.get(name, {}))

    def get(self, name: str, key: str, default: Any = None) -> Any:
        return self.sections.get(name, {}).get(key, default)

    @property
    def model(self) -> NonlinearityModel:
        return NonlinearityModel.from_config(self.sections["nonlinearity"])

    @property
    def c1(self) -> float:
        return self.sections["speeds"]["c1"]

    @property
    def c2(self) -> float:
        return self.sections["speeds"]["c2"]

    @property
    def sign(self) -> int:
        return self.get("speeds", "sign", 1)

    @property
    def truncation(self) -> Tuple[Tuple[int, int], ...]:
        entries = self.get("approx", "truncation", [[1, 0]])
        return tuple((int(k), int(l)) for k, l in entries)

    @property
    def output_dir(self) -> Path:
        return Path(self.get("output", "directory", DEFAULT_OUTPUT_DIR))

    def with_speeds(self, c2: float) -> "ExperimentConfig":
        sections = copy.deepcopy(self.sections)
        sections["speeds"]["c2"] = float(c2)
        return ExperimentConfig(sections=sections)

    def canonical(self) -> Dict[str, Any]:
        """Sections that determine results; output settings are excluded."""

        return {name: values for name, values in self.sections.items() if name != "output"}

    def hash(self) -> str:
        return config_hash(self.canonical())


def config_hash(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


__all__ = [
    "ALLOWED",
    "ExperimentConfig",
    "config_hash",
    "load_config",
    "parse_config",
]
