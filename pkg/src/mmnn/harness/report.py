"""Turning an artifact directory into smoothed curves, difference fields and a table."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..metrics import last100_avg, smoothed_curve
from .io import read_history, read_table, write_table

CURVE_HEADER = ("epoch", "test_mse", "test_max", "aver_mse", "aver_max",
                "log10_aver_mse", "log10_aver_max")


def _log10(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log10(v)


def difference_field(snapshot_csv) -> tuple[list[str], np.ndarray]:
    header, rows = read_table(snapshot_csv)
    if header[-2:] != ["pred", "truth"]:
        raise ValueError(f"{snapshot_csv}: not a prediction snapshot")
    data = np.array(rows, dtype=np.float64)
    coords = data[:, :-2]
    return header[:-2] + ["diff"], np.column_stack([coords, data[:, -2] - data[:, -1]])


def report(run_dir) -> str:
    """Write curves.csv and diff_epoch{k}.csv into ``run_dir``; return a text table."""
    d = Path(run_dir)
    hist_path = d / "history.csv"
    if not hist_path.exists():
        raise FileNotFoundError(f"{hist_path} not found")
    rows = read_history(hist_path)
    lines = [f"run: {d}"]
    if rows:
        e_mse = np.array([r.test_mse for r in rows])
        e_max = np.array([r.test_max for r in rows])
        a_mse, a_max = smoothed_curve(e_mse), smoothed_curve(e_max)
        table = np.column_stack([[r.epoch for r in rows], e_mse, e_max, a_mse, a_max,
                                 _log10(a_mse), _log10(a_max)])
        write_table(d / "curves.csv", CURVE_HEADER,
                    [[int(t[0])] + list(t[1:]) for t in table])
        l_mse, l_max = last100_avg(rows)
        lines += [f"epochs: {len(rows)}",
                  f"final test mse: {rows[-1].test_mse:.3e}   max: {rows[-1].test_max:.3e}",
                  f"last-100 mean mse: {l_mse:.3e}   max: {l_max:.3e}"]
    else:
        lines.append("epochs: 0")
    for snap in sorted(d.glob("pred_epoch*.csv"), key=lambda p: int(re.findall(r"\d+", p.stem)[-1])):
        header, diff = difference_field(snap)
        k = re.findall(r"\d+", snap.stem)[-1]
        write_table(d / f"diff_epoch{k}.csv", header, diff.tolist())
        lines.append(f"epoch {k}: max |pred - truth| = {np.max(np.abs(diff[:, -1])):.3e}")
    summary = d / "summary.csv"
    if summary.exists():
        header, vals = read_table(summary)
        for row in vals:
            lines.append("  ".join(f"{h}={v}" for h, v in zip(header, row)))
    return "\n".join(lines)
