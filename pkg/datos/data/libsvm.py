"""Dataset containers and LIBSVM ingestion."""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional
import logging

import numpy as np

logger = logging.getLogger(__name__)


class LibsvmFormatError(ValueError):
    """A LIBSVM line could not be parsed."""


class LabelRule(Enum):
    """How raw LIBSVM labels are mapped to {-1, +1}."""
    PARITY = "parity"  # ±1 kept, other integers: even -> +1, odd -> -1
    SIGN = "sign"      # positive -> +1, otherwise -1

    def apply(self, raw: float) -> float:
        if self is LabelRule.SIGN:
            return 1.0 if raw > 0 else -1.0
        if raw in (1.0, -1.0):
            return raw
        if raw != int(raw):
            raise ValueError(f"parity rule needs integer labels, got {raw}")
        return 1.0 if int(raw) % 2 == 0 else -1.0


@dataclass
class Dataset:
    """Feature rows and labels owned by one agent (or a whole corpus)."""
    features: np.ndarray  # n x d
    labels: np.ndarray    # n

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"row counts disagree: {self.features.shape[0]} features vs {self.labels.shape[0]} labels"
            )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1.0, 1.0))))


@dataclass
class Shards:
    """Per-agent shards plus the number of trailing rows dropped to balance them."""
    shards: list[Dataset]
    dropped: int

    def __iter__(self) -> Iterator[Dataset]:
        return iter(self.shards)

    def __len__(self) -> int:
        return len(self.shards)

    def __getitem__(self, i: int) -> Dataset:
        return self.shards[i]


def read_libsvm(
    path: str | Path,
    d: int,
    limit: Optional[int] = None,
    rule: LabelRule = LabelRule.PARITY,
) -> Dataset:
    """
    Read a LIBSVM text file (`label idx:val ...`, 1-based indices) into dense rows.

    Blank lines and `#` comments are skipped. At most `limit` rows are kept.
    """
    rows: list[np.ndarray] = []
    labels: list[float] = []

    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if limit is not None and len(rows) >= limit:
                break

            tokens = line.split()
            try:
                raw = float(tokens[0])
            except ValueError:
                raise LibsvmFormatError(f"malformed label at line {lineno}: {tokens[0]!r}") from None

            row = np.zeros(d)
            for tok in tokens[1:]:
                idx_text, sep, val_text = tok.partition(":")
                if not sep:
                    raise LibsvmFormatError(f"malformed feature at line {lineno}: {tok!r}")
                try:
                    idx, val = int(idx_text), float(val_text)
                except ValueError:
                    raise LibsvmFormatError(f"malformed feature at line {lineno}: {tok!r}") from None
                if idx < 1 or idx > d:
                    raise LibsvmFormatError(f"index out of range at line {lineno}: {idx} not in [1, {d}]")
                row[idx - 1] = val

            try:
                labels.append(rule.apply(raw))
            except ValueError as e:
                raise LibsvmFormatError(f"{e} at line {lineno}") from None
            rows.append(row)

    features = np.vstack(rows) if rows else np.zeros((0, d))
    return Dataset(features=features, labels=np.array(labels))


def split_dataset(data: Dataset, m: int) -> Shards:
    """Contiguous equal shards in row order; trailing rows beyond a multiple of m are dropped."""
    if m < 1:
        raise ValueError(f"agent count must be positive, got m={m}")
    per_agent = data.n // m
    dropped = data.n - per_agent * m
    if dropped:
        logger.info("split_dataset: dropping %d trailing rows to form %d shards of %d", dropped, m, per_agent)
    shards = [
        Dataset(
            features=data.features[i * per_agent:(i + 1) * per_agent],
            labels=data.labels[i * per_agent:(i + 1) * per_agent],
        )
        for i in range(m)
    ]
    return Shards(shards=shards, dropped=dropped)
