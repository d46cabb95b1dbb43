"""SQLite cache of reference solutions."""

import hashlib
import json
import logging
import sqlite3
from pathlib import Path
from typing import Any, Optional

from .models import ReferenceRow

logger = logging.getLogger(__name__)


def config_hash(problem: dict[str, Any], tol: float) -> str:
    """Stable digest of a problem configuration and the reference tolerance."""
    payload = json.dumps({"problem": problem, "tol": tol}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReferenceCache:
    """Reference solutions keyed by problem-config hash."""

    def __init__(self, db_path: str | Path = "references.db"):
        self.db_path = Path(db_path)
        self.conn: Optional[sqlite3.Connection] = None

    def connect(self) -> None:
        """Connect to the database and create the table if needed."""
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(self.db_path)
        self._create_tables()

    def close(self) -> None:
        if self.conn:
            self.conn.close()
            self.conn = None

    def __enter__(self) -> "ReferenceCache":
        self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _create_tables(self) -> None:
        cursor = self.conn.cursor()
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS reference_solutions (
                config_hash TEXT PRIMARY KEY,
                x_star TEXT NOT NULL,
                u_star REAL NOT NULL,
                residual REAL NOT NULL,
                iterations INTEGER NOT NULL
            )
        """)
        self.conn.commit()

    def get(self, key: str) -> Optional[ReferenceRow]:
        cursor = self.conn.cursor()
        cursor.execute("SELECT * FROM reference_solutions WHERE config_hash = ?", (key,))
        row = cursor.fetchone()
        if row is None:
            logger.debug("reference cache miss for %s", key[:12])
            return None
        logger.debug("reference cache hit for %s", key[:12])
        return ReferenceRow.from_db_row(row)

    def save(self, row: ReferenceRow) -> None:
        cursor = self.conn.cursor()
        cursor.execute("""
            INSERT OR REPLACE INTO reference_solutions
            (config_hash, x_star, u_star, residual, iterations)
            VALUES (?, ?, ?, ?, ?)
        """, row.to_db_tuple())
        self.conn.commit()

    def count(self) -> int:
        cursor = self.conn.cursor()
        cursor.execute("SELECT COUNT(*) FROM reference_solutions")
        return int(cursor.fetchone()[0])

    def clear_all(self) -> None:
        """Clear all cached references."""
        cursor = self.conn.cursor()
        cursor.execute("DELETE FROM reference_solutions")
        self.conn.commit()
