"""Persistence layer for collision reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from sqlalchemy import (
    Column,
    Float,
    Integer,
    MetaData,
    String,
    Table,
    Text,
    create_engine,
    delete,
    select,
    update,
)
from sqlalchemy.engine import Engine

_LOGGER = logging.getLogger(__name__)

DEFAULT_DATABASE_URL = "sqlite:///gkdvlab_runs.db"

metadata = MetaData()


runs_table = Table(
    "collision_runs",
    metadata,
    Column("id", String(64), primary_key=True),
    Column("command", String(32), nullable=False),
    Column("payload", Text, nullable=False),
    Column("c1", Float, nullable=False),
    Column("c2", Float, nullable=False),
    Column("p", Integer, nullable=False),
    Column("c1_plus", Float, nullable=True),
    Column("c2_plus", Float, nullable=True),
    Column("delta1", Float, nullable=True),
    Column("delta2", Float, nullable=True),
    Column("m_plus", Float, nullable=True),
    Column("e_plus", Float, nullable=True),
)

_SUMMARY_FIELDS = {
    "c1_plus": "c1_plus",
    "c2_plus": "c2_plus",
    "delta1": "delta1",
    "delta2": "delta2",
    "M_plus": "m_plus",
    "E_plus": "e_plus",
}


@dataclass
class ReportStore:
    """SQL-backed catalogue of finished runs, keyed by config hash."""

    database_url: Optional[str] = None

    def __post_init__(self) -> None:
        self._engine: Engine = create_engine(
            self.database_url or DEFAULT_DATABASE_URL, future=True
        )
        metadata.create_all(self._engine)

    def close(self) -> None:
        """Dispose of the underlying engine."""

        self._engine.dispose()

    # ------------------------------------------------------------------
    # CRUD operations
    # ------------------------------------------------------------------
    def list_reports(self, command: Optional[str] = None) -> List[Dict[str, Any]]:
        """Return stored runs ordered by (c2, id), optionally for one command."""

        query = select(runs_table).order_by(runs_table.c.c2, runs_table.c.id)
        if command is not None:
            query = query.where(runs_table.c.command == command)
        with self._engine.begin() as conn:
            rows = conn.execute(query).mappings().all()
        return [self._row_to_payload(row) for row in rows]

    def get_report(self, run_id: str) -> Optional[Dict[str, Any]]:
        with self._engine.begin() as conn:
            row = (
                conn.execute(select(runs_table).where(runs_table.c.id == run_id))
                .mappings()
                .first()
            )
        return self._row_to_payload(row) if row else None

    def upsert_report(
        self, run_id: str, command: str, payload: Dict[str, Any]
    ) -> Dict[str, Any]:
        """Insert or replace the run ``run_id`` and return the stored record."""

        cleaned = self._prepare_for_storage(run_id, command, payload)
        with self._engine.begin() as conn:
            existing = conn.execute(
                select(runs_table.c.id).where(runs_table.c.id == run_id)
            ).scalar_one_or_none()
            if existing:
                conn.execute(
                    update(runs_table).where(runs_table.c.id == run_id).values(**cleaned)
                )
            else:
                conn.execute(runs_table.insert().values(**cleaned))

            row = (
                conn.execute(select(runs_table).where(runs_table.c.id == run_id))
                .mappings()
                .first()
            )
        if not row:
            raise RuntimeError("Failed to persist report")
        _LOGGER.debug("stored %s run %s", command, run_id)
        return self._row_to_payload(row)

    def clear(self) -> None:
        with self._engine.begin() as conn:
            conn.execute(delete(runs_table))

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------
    @staticmethod
    def _prepare_for_storage(
        run_id: str, command: str, payload: Dict[str, Any]
    ) -> Dict[str, Any]:
        config = payload.get("config", {})
        model = config.get("model", {})
        if "c1" not in config or "c2" not in config or "p" not in model:
            raise ValueError("report payload needs config.c1, config.c2 and config.model.p")
        cleaned: Dict[str, Any] = {
            "id": run_id,
            "command": command,
            "payload": json.dumps(payload, sort_keys=True, default=float),
            "c1": float(config["c1"]),
            "c2": float(config["c2"]),
            "p": int(model["p"]),
        }
        for key, column in _SUMMARY_FIELDS.items():
            if payload.get(key) is not None:
                cleaned[column] = float(payload[key])
        return cleaned

    @staticmethod
    def _row_to_payload(row: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        if row is None:
            return {}
        record = {k: v for k, v in row.items() if v is not None}
        record["payload"] = json.loads(record["payload"])
        return record


__all__ = ["DEFAULT_DATABASE_URL", "ReportStore", "runs_table"]
