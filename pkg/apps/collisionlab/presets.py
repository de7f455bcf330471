"""Shipped experiment presets, one per regime of the collision problem."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass(frozen=True)
class Preset:
    """Named starting point for an experiment config."""

    name: str
    description: str
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def as_sections(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.sections)


_CATALOG: List[Preset] = [
    Preset(
        name="integrable-p2",
        description="KdV, speeds (1, 0.25); elastic collision checked against the exact solution.",
        sections={
            "nonlinearity": {"p": 2, "monomials": []},
            "speeds": {"c1": 1.0, "c2": 0.25},
            "collision": {"initial": "exact"},
        },
    ),
    Preset(
        name="mkdv-p3",
        description="Modified KdV, small speed 0.01, dressed start.",
        sections={
            "nonlinearity": {"p": 3, "monomials": []},
            "speeds": {"c1": 1.0, "c2": 0.01},
            "collision": {"initial": "dressed"},
        },
    ),
    Preset(
        name="quartic-p4",
        description="Quartic gKdV, small speed 0.005; inelastic regime.",
        sections={
            "nonlinearity": {"p": 4, "monomials": []},
            "speeds": {"c1": 1.0, "c2": 0.005},
            "collision": {"initial": "dressed"},
        },
    ),
    Preset(
        name="perturbed-p2",
        description="f(u) = u^2 + 0.05 u^4, small speed 0.01.",
        sections={
            "nonlinearity": {"p": 2, "monomials": [[0.05, 4]]},
            "speeds": {"c1": 1.0, "c2": 0.01},
            "collision": {"initial": "dressed"},
        },
    ),
]

PRESETS: Dict[str, Preset] = {preset.name: preset for preset in _CATALOG}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r} (known: {known})") from None


def list_presets() -> List[Preset]:
    return list(_CATALOG)


__all__ = ["PRESETS", "Preset", "get_preset", "list_presets"]
