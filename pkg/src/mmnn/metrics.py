"""Error metrics and the smoothing used when reporting training curves."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

HISTORY_COLUMNS = ("epoch", "lr", "train_mse", "test_mse", "test_max", "wall_ms")


@dataclass
class MetricRow:
    epoch: int
    lr: float
    train_mse: float
    test_mse: float
    test_max: float
    wall_ms: float = 0.0

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"prediction has {p.size} entries, truth has {t.size}")
    if p.size == 0:
        raise ValueError("empty batch")
    return p, t


def mse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean((p - t) ** 2))


def max_err(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.max(np.abs(p - t)))


def test_error_aver(errors, k: int, half_window: int = 100) -> float:
    """Mean of ``errors`` over epochs max(1, k-100) .. min(k+100, #epochs).

    ``errors[0]`` belongs to epoch 1.
    """
    errors = np.asarray(errors, dtype=np.float64)
    n = len(errors)
    if not 1 <= k <= n:
        raise ValueError(f"epoch {k} outside 1..{n}")
    lo = max(1, k - half_window)
    hi = min(k + half_window, n)
    return float(errors[lo - 1:hi].mean())


def smoothed_curve(errors, half_window: int = 100) -> np.ndarray:
    """``test_error_aver`` for every epoch, via a cumulative sum."""
    e = np.asarray(errors, dtype=np.float64)
    n = len(e)
    if n == 0:
        return e
    cs = np.concatenate([[0.0], np.cumsum(e)])
    k = np.arange(1, n + 1)
    lo = np.maximum(1, k - half_window)
    hi = np.minimum(k + half_window, n)
    return (cs[hi] - cs[lo - 1]) / (hi - lo + 1)


def last100_avg(rows, count: int = 100) -> tuple[float, float]:
    """Mean test MSE and test MAX over the final ``min(count, len(rows))`` rows."""
    if len(rows) == 0:
        raise ValueError("history is empty")
    tail = rows[-count:]
    return (float(np.mean([r.test_mse for r in tail])),
            float(np.mean([r.test_max for r in tail])))
