"""Adam, learning-rate schedules and the mini-batch training loop."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Rng
from .grad import GradBag, backprop_mse
from .metrics import MetricRow, max_err, mse
from .nets import Kind, Network, NonFiniteError, count_params, forward_chunked

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class Constant:
    lr: float

    def lr_at(self, k: int) -> float:
        return self.lr


@dataclass(frozen=True)
class StepDecay:
    """``base * gamma ** floor(k / step_len)``."""

    base: float
    gamma: float
    step_len: int

    def lr_at(self, k: int) -> float:
        return self.base * self.gamma ** (k // self.step_len)


@dataclass(frozen=True)
class PdeWarmup:
    """Linear staircase warm-up followed by step decay.

    For ``k < warm_epochs`` the rate is ``floor(k / warm_step) / warm_div``
    (so it is exactly zero for the first ``warm_step - 1`` epochs); afterwards
    ``decay_base * decay_gamma ** floor((k - warm_epochs) / decay_step)``.
    """

    warm_epochs: int = 16000
    decay_base: float = 0.001
    decay_gamma: float = 0.9
    decay_step: int = 1600
    warm_step: int = 200
    warm_div: float = 800.0

    def lr_at(self, k: int) -> float:
        if k < self.warm_epochs:
            return (k // self.warm_step) / self.warm_div
        return self.decay_base * self.decay_gamma ** ((k - self.warm_epochs) // self.decay_step)


Schedule = Constant | StepDecay | PdeWarmup


def lr_at(schedule: Schedule, k: int) -> float:
    if k < 1:
        raise ValueError(f"epochs are 1-based, got {k}")
    return schedule.lr_at(k)


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict, **kw) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()}, **kw)


def adam_step(params: dict, grads: GradBag | dict, state: AdamState, lr: float) -> dict:
    """One bias-corrected Adam update, applied in place to ``params``."""
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise NonFiniteError(f"non-finite gradient for tensor {k}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for k, g in grads.items():
        if k not in params:
            continue
        p, m, v = params[k], state.m[k], state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        denom = np.sqrt(v / bc2)
        denom += state.eps
        p -= (lr / bc1) * m / denom
    return params


# ---------------------------------------------------------------------------
# training loop

@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    schedule: Schedule
    mode: str = "S1"
    seed: int = 0
    shuffle: bool = True
    snapshot_epochs: tuple[int, ...] = ()
    test_grid: "object | None" = None  # a targets.Dataset; training data when None
    divergence_threshold: float = 1e6
    record_wall_time: bool = False


@dataclass
class TrainingHistory:
    rows: list[MetricRow] = field(default_factory=list)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    status: str = "ok"
    message: str = ""
    trained_params: int = 0
    wall_ms: list[float] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


BatchLoss = Callable[[Network, np.ndarray, np.ndarray, str], tuple[float, GradBag]]
Predict = Callable[[Network, np.ndarray], np.ndarray]


def _default_loss(net, Xb, Yb, mode):
    return backprop_mse(net, Xb, Yb, mode)


def trained_count(net: Network, mode: str) -> int:
    trained, total = count_params(net)
    return total if (mode.upper() == "S2" or net.spec.kind is Kind.FCNN) else trained


def train(net: Network, data, cfg: TrainConfig, *, batch_loss: BatchLoss | None = None,
          predict: Predict | None = None,
          on_epoch: Callable[[MetricRow], None] | None = None) -> TrainingHistory:
    """Run ``cfg.epochs`` epochs of shuffled mini-batch Adam on ``data``.

    ``data`` needs ``inputs`` and ``outputs`` arrays.  ``batch_loss`` defaults
    to MSE; ``predict`` (defaults to the network itself) produces the values
    compared against ``cfg.test_grid.outputs`` after every epoch.
    """
    batch_loss = batch_loss or _default_loss
    predict = predict or forward_chunked
    X = np.asarray(data.inputs, dtype=net.dtype)
    Y = np.asarray(data.outputs, dtype=net.dtype).reshape(len(X), -1)
    if cfg.batch_size > len(X):
        raise ValueError(f"batch size {cfg.batch_size} exceeds dataset size {len(X)}")
    test = cfg.test_grid if cfg.test_grid is not None else data
    test_X = np.asarray(test.inputs, dtype=net.dtype)
    test_Y = np.asarray(test.outputs, dtype=np.float64)
    snaps = set(cfg.snapshot_epochs)
    params = net.params(cfg.mode)
    state = AdamState.for_params(params)
    hist = TrainingHistory(trained_params=trained_count(net, cfg.mode))
    root = Rng(cfg.seed).stream("shuffle")
    n, bs = len(X), cfg.batch_size

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        lr = lr_at(cfg.schedule, epoch)
        if cfg.shuffle:
            order = root.stream(str(epoch)).permutation(n)
            Xs, Ys = X[order], Y[order]
        else:
            Xs, Ys = X, Y
        losses = []
        try:
            for s in range(0, n, bs):
                loss, grads = batch_loss(net, Xs[s:s + bs], Ys[s:s + bs], cfg.mode)
                losses.append(loss)
                if loss > cfg.divergence_threshold:
                    raise NonFiniteError(f"loss {loss:.3e} above divergence threshold")
                adam_step(params, grads, state, lr)
            pred = predict(net, test_X)
        except (NonFiniteError, FloatingPointError) as exc:
            hist.status = "diverged"
            hist.message = f"epoch {epoch}: {exc}"
            log.warning("training aborted: %s", hist.message)
            break
        train_mse = float(np.mean(losses))
        test_mse, test_max = mse(pred, test_Y), max_err(pred, test_Y)
        if not (np.isfinite(test_mse) and np.isfinite(train_mse)):
            hist.status = "diverged"
            hist.message = f"epoch {epoch}: non-finite metrics"
            break
        ms = (time.perf_counter() - t0) * 1e3
        hist.wall_ms.append(ms)
        row = MetricRow(epoch, lr, train_mse, test_mse, test_max,
                        ms if cfg.record_wall_time else 0.0)
        hist.rows.append(row)
        if epoch in snaps:
            hist.snapshots[epoch] = np.asarray(pred, dtype=np.float64).copy()
        if on_epoch is not None:
            on_epoch(row)
    return hist
