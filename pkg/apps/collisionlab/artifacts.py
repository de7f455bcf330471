"""Result files for a single CLI invocation.

Everything is written into a hidden staging directory next to the target
and renamed into place by :meth:`ArtifactWriter.commit`, so a failed command
leaves no partial output behind.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import shutil
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from apps import __version__

_LOGGER = logging.getLogger(__name__)

_VERSIONED_GROUPS = ("shared.solitons", "shared.spectral", "apps.collisionlab")
_THIRD_PARTY = ("numpy", "scipy")


def module_versions() -> Dict[str, str]:
    versions = {group: __version__ for group in _VERSIONED_GROUPS}
    for name in _THIRD_PARTY:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class ArtifactWriter:
    """Staged JSON/CSV/npz writer rooted at ``directory``."""

    def __init__(self, directory: str | Path, config_hash: str) -> None:
        self.directory = Path(directory)
        self.config_hash = config_hash
        self.versions = module_versions()
        self.written: List[str] = []
        self._ensure_parent_dir()
        self._staging: Optional[Path] = Path(
            tempfile.mkdtemp(
                prefix=f".{self.directory.name}.partial-", dir=self.directory.parent
            )
        )

    def _ensure_parent_dir(self) -> None:
        parent_dir = self.directory.parent
        os.makedirs(parent_dir, exist_ok=True)

    def __enter__(self) -> "ArtifactWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.commit()
        else:
            self.discard()

    @property
    def staging(self) -> Path:
        if self._staging is None:
            raise RuntimeError("artifact writer already committed or discarded")
        return self._staging

    def _target(self, name: str) -> Path:
        path = self.staging / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(name)
        return path

    # ------------------------------------------------------------------
    # Writers
    # ------------------------------------------------------------------
    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        document = dict(payload)
        document["config_hash"] = self.config_hash
        document["module_versions"] = self.versions
        path = self._target(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, sort_keys=True, default=_jsonable)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """CSV with ``# key: value`` provenance lines above the header row."""

        path = self._target(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# config_hash: {self.config_hash}\n")
            f.write(f"# module_versions: {json.dumps(self.versions, sort_keys=True)}\n")
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_jsonable(v) if isinstance(v, np.generic) else v for v in row])
        return path

    def write_snapshots(self, name: str, frames: Sequence[Tuple[float, np.ndarray]]) -> Path:
        """Frames (t, u[.]) as a compressed npz with the provenance strings."""

        path = self._target(name)
        times = np.asarray([t for t, _ in frames], dtype=float)
        fields = np.stack([u for _, u in frames]) if frames else np.empty((0, 0))
        with open(path, "wb") as f:
            np.savez_compressed(
                f,
                t=times,
                u=fields,
                config_hash=np.array(self.config_hash),
                module_versions=np.array(json.dumps(self.versions, sort_keys=True)),
            )
        return path

    # ------------------------------------------------------------------
    # Finalisation
    # ------------------------------------------------------------------
    def commit(self) -> Path:
        staging = self.staging
        if self.directory.exists():
            shutil.rmtree(self.directory)
        os.replace(staging, self.directory)
        self._staging = None
        _LOGGER.info("wrote %d artifact(s) to %s", len(self.written), self.directory)
        return self.directory

    def discard(self) -> None:
        if self._staging is not None:
            shutil.rmtree(self._staging, ignore_errors=True)
            self._staging = None
            _LOGGER.debug("discarded staged artifacts for %s", self.directory)


def read_json(path: str | Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def read_csv(path: str | Path) -> Tuple[List[str], List[List[str]]]:
    """Header and rows of a CSV written by :meth:`ArtifactWriter.write_csv`."""

    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


__all__ = ["ArtifactWriter", "module_versions", "read_csv", "read_json"]
