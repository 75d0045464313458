"""Running configured experiments and writing their artifact directories."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Rng
from ..metrics import last100_avg
from ..nets import Network, build_network, count_params, save_network
from ..optim import TrainConfig, TrainingHistory, train
from ..targets import Dataset, disk_filter, grid_1d, grid_nd
from .config import ExperimentConfig
from .io import ensure_dir, write_history, write_snapshot, write_table

log = logging.getLogger(__name__)

SUMMARY_HEADER = ("name", "seed", "status", "epochs", "last100_mse", "last100_max",
                  "trained_params", "total_params")
SEED_TABLE_HEADER = ("seed", "mse", "max", "status")


@dataclass
class RunResult:
    out_dir: Path | None
    history: TrainingHistory
    net: Network
    summary: dict

    @property
    def ok(self) -> bool:
        return self.history.status == "ok"


def make_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    target = cfg.target_fn()
    d, lo, hi = target.dim, cfg.data.lo, cfg.data.hi
    if d == 1:
        train_ds = grid_1d(cfg.data.train_n, lo, hi, target)
        test_ds = grid_1d(cfg.test_n(), lo, hi, target)
    else:
        train_ds = grid_nd(cfg.data.train_n, d, lo, hi, target)
        test_n = cfg.test_n()
        test_ds = train_ds if test_n == cfg.data.train_n else grid_nd(test_n, d, lo, hi, target)
    if cfg.data.disk:
        train_ds, test_ds = disk_filter(train_ds), disk_filter(test_ds)
    return train_ds, test_ds


def run_experiment(cfg: ExperimentConfig, out_dir=None, seed: int | None = None) -> RunResult:
    """Train one configured network; write artifacts when ``out_dir`` is given.

    Artifacts: config.echo, history.csv, pred_epoch{k}.csv, checkpoint.bin,
    summary.csv and (when wall time recording is off) timing.csv.
    """
    if seed is not None:
        cfg = cfg.with_seed(seed)
    cfg.validate()
    train_ds, test_ds = make_datasets(cfg)
    spec = cfg.net_spec()
    net = build_network(spec, Rng(cfg.train.seed))
    tc = TrainConfig(epochs=cfg.train.epochs, batch_size=min(cfg.train.batch_size, len(train_ds)),
                     schedule=cfg.schedule(), mode=cfg.train.mode.upper(), seed=cfg.train.seed,
                     shuffle=cfg.train.shuffle, snapshot_epochs=cfg.output.snapshot_epochs,
                     test_grid=test_ds.astype(np.float32), record_wall_time=cfg.output.record_wall_time)
    log.info("%s: %s, %d train / %d test points", cfg.name, spec.label, len(train_ds), len(test_ds))
    hist = train(net, train_ds.astype(np.float32), tc)
    trained, total = count_params(net)
    if tc.mode == "S2":
        trained = total
    l_mse, l_max = last100_avg(hist.rows) if hist.rows else (float("nan"), float("nan"))
    summary = {"name": cfg.name, "seed": cfg.train.seed, "status": hist.status,
               "epochs": len(hist), "last100_mse": l_mse, "last100_max": l_max,
               "trained_params": trained, "total_params": total}
    out = None
    if out_dir is not None:
        out = ensure_dir(out_dir)
        (out / "config.echo").write_text(cfg.to_text())
        write_history(out / "history.csv", hist.rows)
        if not cfg.output.record_wall_time:
            write_table(out / "timing.csv", ("epoch", "wall_ms"),
                        [[r.epoch, ms] for r, ms in zip(hist.rows, hist.wall_ms)])
        for k, pred in sorted(hist.snapshots.items()):
            write_snapshot(out / f"pred_epoch{k}.csv", test_ds.inputs, pred, test_ds.outputs)
        save_network(net, out / "checkpoint.bin")
        write_table(out / "summary.csv", SUMMARY_HEADER, [[summary[k] for k in SUMMARY_HEADER]])
    return RunResult(out, hist, net, summary)


def multi_seed(cfg: ExperimentConfig, seeds, out_dir=None) -> list[dict]:
    """One run per seed (sorted); a failing seed is recorded and the sweep continues."""
    rows = []
    for s in sorted(seeds):
        sub = None if out_dir is None else Path(out_dir) / f"seed_{s}"
        try:
            res = run_experiment(cfg, sub, seed=s)
            rows.append({"seed": s, "mse": res.summary["last100_mse"],
                         "max": res.summary["last100_max"], "status": res.history.status})
        except Exception as exc:
            log.error("seed %d failed: %s", s, exc)
            rows.append({"seed": s, "mse": float("nan"), "max": float("nan"), "status": f"error: {exc}"})
    if out_dir is not None:
        ensure_dir(out_dir)
        write_table(Path(out_dir) / "table.csv", SEED_TABLE_HEADER,
                    [[r[k] for k in SEED_TABLE_HEADER] for r in rows])
    return rows
