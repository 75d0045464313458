"""Multi-seed runs of the hard-constraint Poisson solver."""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np

from ..activations import Activation
from ..core import Rng
from ..nets import Kind, NetworkSpec, build_network, forward_chunked, save_network
from ..pinn import PdeProblem, constrained_eval, evaluate_solution, pde_train_config, train_pde
from .io import ensure_dir, write_history, write_table

log = logging.getLogger(__name__)

TABLE_HEADER = ("seed", "mse", "max", "boundary_ratio", "status", "epochs")


def parse_net_spec(text: str, d_in: int = 2, d_out: int = 1,
                   activation=Activation.SINE) -> NetworkSpec:
    """``"301x16x6"`` is an MMNN; a rank of ``-`` or ``--`` means an FCNN."""
    m = re.fullmatch(r"\s*(\d+)\s*[x,]\s*(\d+|-+)\s*[x,]\s*(\d+)\s*", text)
    if not m:
        raise ValueError(f"network spec {text!r} is not WIDTHxRANKxDEPTH")
    w, r, depth = m.groups()
    if r.startswith("-"):
        return NetworkSpec(Kind.FCNN, d_in, d_out, int(w), None, int(depth), activation)
    return NetworkSpec(Kind.MMNN, d_in, d_out, int(w), int(r), int(depth), activation)


def parse_seeds(text: str) -> list[int]:
    """``"0..3"`` (inclusive) or ``"0,5,7"``."""
    text = text.strip()
    if not text:
        return []
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        lo, hi = map(int, m.groups())
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",")]


def boundary_points(n: int = 4000, seed: int = 0) -> np.ndarray:
    """``n`` random points spread evenly over the four edges of [-1, 1]^2."""
    rng = Rng(seed).stream("boundary")
    t = rng.uniform(-1.0, 1.0, n)
    side = np.arange(n) % 4
    P = np.empty((n, 2))
    P[:, 0] = np.where(side < 2, np.where(side == 0, -1.0, 1.0), t)
    P[:, 1] = np.where(side < 2, t, np.where(side == 2, -1.0, 1.0))
    return P


def boundary_ratio(net, problem: PdeProblem | None = None, n: int = 4000) -> float:
    """max |u| / max |h| over sampled boundary points."""
    problem = problem or PdeProblem()
    P = boundary_points(n)
    u = constrained_eval(net, P, mask=problem.mask)
    h = forward_chunked(net, P.astype(net.dtype))[:, 0]
    sup_h = float(np.max(np.abs(h)))
    return float(np.max(np.abs(u))) / sup_h if sup_h > 0 else 0.0


def run_pde_seed(spec: NetworkSpec, seed: int, epochs: int, out_dir=None,
                 problem: PdeProblem | None = None, mode: str = "S1") -> dict:
    problem = problem or PdeProblem()
    net = build_network(spec, Rng(seed))
    hist = train_pde(net, problem, pde_train_config(epochs, seed=seed, mode=mode))
    mse, mx = evaluate_solution(net, problem)
    row = {"seed": seed, "mse": mse, "max": mx, "boundary_ratio": boundary_ratio(net, problem),
           "status": hist.status, "epochs": len(hist)}
    if out_dir is not None:
        d = ensure_dir(Path(out_dir) / f"seed_{seed}")
        write_history(d / "history.csv", hist.rows)
        save_network(net, d / "checkpoint.bin")
    log.info("pde %s seed %d: mse %.3e max %.3e (%s)", spec.label, seed, mse, mx, hist.status)
    return row


def pde_sweep(spec: NetworkSpec, seeds, epochs: int, out_dir=None, **kw) -> list[dict]:
    rows = []
    for s in sorted(seeds):
        try:
            rows.append(run_pde_seed(spec, s, epochs, out_dir, **kw))
        except Exception as exc:  # recorded, sweep continues
            log.error("seed %d failed: %s", s, exc)
            rows.append({"seed": s, "mse": float("nan"), "max": float("nan"),
                         "boundary_ratio": float("nan"), "status": f"error: {exc}", "epochs": 0})
    if out_dir is not None:
        write_table(Path(out_dir) / "table.csv", TABLE_HEADER,
                    [[r[k] for k in TABLE_HEADER] for r in rows])
    return rows
