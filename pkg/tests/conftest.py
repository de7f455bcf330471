"""Shared fixtures for the collision lab test-suite."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable, Dict

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from apps.collisionlab.config import ExperimentConfig, parse_config
from shared.solitons.linearized_operator import OperatorGrid, build_operator
from shared.solitons.nonlinearity import NonlinearityModel, pure_power
from shared.solitons.soliton_profile import SolitonProfile, build_profile
from shared.spectral.pde_integrator import FieldState

ENV_VARIABLES = ("GKDVLAB_DB_URL", "GKDVLAB_OUTPUT_DIR", "GKDVLAB_WORKERS")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ENV_VARIABLES:
        monkeypatch.delenv(name, raising=False)


@pytest.fixture(scope="session")
def kdv() -> NonlinearityModel:
    return pure_power(2)


@pytest.fixture(scope="session")
def unit_profiles() -> Dict[int, SolitonProfile]:
    return {p: build_profile(pure_power(p), 1.0) for p in (2, 3, 4)}


@pytest.fixture(scope="session")
def unit_operators(unit_profiles) -> Dict[int, OperatorGrid]:
    return {p: build_operator(profile) for p, profile in unit_profiles.items()}


@pytest.fixture
def field_state(kdv) -> Callable[..., FieldState]:
    """Factory for periodic states on [-L/2, L/2) built from a function of x."""

    def build(initial, length: float = 80.0, n: int = 512, **kwargs) -> FieldState:
        return FieldState.from_function(kdv, length, n, initial, **kwargs)

    return build


def sech2(x: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(x) ** 2


def kdv_soliton(c: float, x: np.ndarray) -> np.ndarray:
    return 1.5 * c * sech2(0.5 * np.sqrt(c) * x)


@pytest.fixture
def experiment_factory() -> Callable[..., ExperimentConfig]:
    """Validated configs without environment overrides."""

    def build(**sections) -> ExperimentConfig:
        raw = {
            "nonlinearity": {"p": 2},
            "speeds": {"c1": 1.0, "c2": 0.25},
        }
        for name, values in sections.items():
            raw.setdefault(name, {}).update(values)
        return parse_config(raw, use_environment=False)

    return build
