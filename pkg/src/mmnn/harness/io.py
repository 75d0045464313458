"""CSV persistence for histories, tables and prediction snapshots."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..metrics import HISTORY_COLUMNS, MetricRow


def fmt(v) -> str:
    """Shortest text that parses back to the same float (or int)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_history(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for r in rows:
            w.writerow([fmt(v) for v in r.as_tuple()])


def read_history(path) -> list[MetricRow]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != HISTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected history header {header}")
        return [MetricRow(int(r[0]), *map(float, r[1:])) for r in rd]


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty table")
    return rows[0], rows[1:]


def write_snapshot(path, X, pred, truth) -> None:
    X = np.asarray(X, dtype=np.float64)
    names = [f"x{i + 1}" for i in range(X.shape[1])]
    write_table(path, names + ["pred", "truth"],
                np.column_stack([X, np.ravel(pred), np.ravel(truth)]).tolist())


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
