"""Row models for traces and cached reference solutions."""

from dataclasses import dataclass, field, fields
from typing import Any, Optional
import json

import numpy as np


# Column order of trace.csv
TRACE_COLUMNS = [
    "k",
    "alpha_min",
    "alpha_max",
    "ls_trials_total",
    "gap_surrogate",
    "consensus_err",
    "support_size",
    "vec_msgs",
    "scalar_msgs",
    "broadcast_msgs",
]

# Per-round quantities emitted as separate k,value plot files
EXTRA_METRICS = ["dist_sq", "ergodic_gap", "drops"]


@dataclass
class TraceRow:
    """One round of a run. Optional metrics are None when not computable."""
    k: int
    alpha_min: float
    alpha_max: float
    ls_trials_total: int
    gap_surrogate: Optional[float]
    consensus_err: float
    support_size: Optional[int]
    vec_msgs: int
    scalar_msgs: int
    broadcast_msgs: int
    dist_sq: Optional[float] = None
    ergodic_gap: Optional[float] = None
    drops: int = 0
    identified: Optional[bool] = None
    merit: Optional[float] = None  # needs dual rows S* in the reference

    def to_csv_fields(self) -> list[str]:
        return [_fmt(getattr(self, name)) for name in TRACE_COLUMNS]

    def metric(self, name: str) -> Optional[float]:
        value = getattr(self, name)
        return None if value is None else float(value)


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


@dataclass
class RunTrace:
    """All rows of one run plus the configuration echo and final iterates."""
    algorithm: str
    rows: list[TraceRow] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    final_state: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    alpha_history: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def rounds(self) -> int:
        return len(self.rows) - 1

    @property
    def last(self) -> TraceRow:
        return self.rows[-1]

    def series(self, name: str) -> np.ndarray:
        """One column as a float array; missing values become nan."""
        return np.array([
            np.nan if getattr(r, name) is None else float(getattr(r, name)) for r in self.rows
        ])


@dataclass
class ReferenceRow:
    """A cached reference solution keyed by the hash of its problem config."""
    config_hash: str
    x_star: np.ndarray
    u_star: float
    residual: float
    iterations: int

    def to_db_tuple(self) -> tuple:
        return (
            self.config_hash,
            json.dumps(self.x_star.tolist()),
            self.u_star,
            self.residual,
            self.iterations,
        )

    @classmethod
    def from_db_row(cls, row: tuple) -> "ReferenceRow":
        return cls(
            config_hash=row[0],
            x_star=np.array(json.loads(row[1]), dtype=float),
            u_star=row[2],
            residual=row[3],
            iterations=row[4],
        )


def row_field_names() -> list[str]:
    return [f.name for f in fields(TraceRow)]
