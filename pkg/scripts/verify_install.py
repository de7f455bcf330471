"""Verify that the lab's dependencies and entry modules import cleanly.

Usage:
    python scripts/verify_install.py
"""

import importlib
import sys

REQUIRED = ["numpy", "scipy", "sqlalchemy", "dotenv"]
ENTRY_MODULES = [
    "shared.solitons.soliton_profile",
    "shared.spectral.pde_integrator",
    "apps.collisionlab.cli",
]


def check(name):
    try:
        module = importlib.import_module(name)
    except Exception as e:
        print(f"[missing] {name}: {e}")
        return False
    version = getattr(module, "__version__", "")
    print(f"[ok] {name} {version}".rstrip())
    return True


def main():
    names = list(REQUIRED)
    if sys.version_info < (3, 11):
        names.append("tomli")
    results = [check(name) for name in names + ENTRY_MODULES]
    if not all(results):
        sys.exit(2)
    print("Import checks passed for core entry modules.")


if __name__ == "__main__":
    main()
