"""CSV emission for run traces and plot data."""

import csv
from pathlib import Path
from typing import Any, Sequence

from .models import EXTRA_METRICS, TRACE_COLUMNS, RunTrace, _fmt

# Metrics every run emits as separate k,value files
PLOT_METRICS = ["gap_surrogate", "consensus_err", "alpha_min", "alpha_max", *EXTRA_METRICS]

# Columns of each algorithm carried into compare.csv
COMPARE_COLUMNS = ["alpha_min", "gap_surrogate", "consensus_err", "dist_sq"]


def _header_lines(config: dict[str, Any]) -> list[str]:
    return [f"# {key} = {config[key]}" for key in sorted(config)]


def write_trace(trace: RunTrace, path: str | Path) -> Path:
    """trace.csv: '#' config echo, then one header line and one row per round."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# algorithm = {trace.algorithm}\n")
        for line in _header_lines(trace.config):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            writer.writerow(row.to_csv_fields())
    return path


def read_trace_rows(path: str | Path) -> list[dict[str, str]]:
    """Rows of a written trace.csv as dicts, skipping the comment header."""
    with Path(path).open(newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_metric_files(trace: RunTrace, out_dir: str | Path, metrics: Sequence[str] = PLOT_METRICS) -> list[Path]:
    """One '<metric>.csv' per metric with columns k,value; rows without a value are skipped."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in metrics:
        path = out_dir / f"{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "value"])
            for row in trace.rows:
                value = getattr(row, name)
                if value is not None:
                    writer.writerow([row.k, _fmt(value)])
        written.append(path)
    return written


def write_compare(traces: Sequence[RunTrace], path: str | Path, columns: Sequence[str] = COMPARE_COLUMNS) -> Path:
    """
    Merge traces on k. Each algorithm contributes '<algorithm>.<column>' fields;
    runs that stopped early leave their later cells empty.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_k = [{row.k: row for row in t.rows} for t in traces]
    ks = sorted(set().union(*(d.keys() for d in by_k))) if by_k else []

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k"] + [f"{t.algorithm}.{c}" for t in traces for c in columns])
        for k in ks:
            cells = [str(k)]
            for rows in by_k:
                row = rows.get(k)
                cells.extend(_fmt(getattr(row, c)) if row is not None else "" for c in columns)
            writer.writerow(cells)
    return path
