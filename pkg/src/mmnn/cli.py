"""Command line entry point: ``mmnn train|decompose|pde|report|registry``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import tune_allocator
from .decomp import Partition1D, export_components, reconstruct_1d
from .harness import registry
from .harness.config import ConfigError, ExperimentConfig
from .harness.pde import TABLE_HEADER, parse_net_spec, parse_seeds, pde_sweep
from .harness.report import report
from .harness.runner import run_experiment
from .targets import TargetFn, UnknownTarget

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4


def _train(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    return _run(cfg, args.out, args.seed)


def _run(cfg: ExperimentConfig, out, seed) -> int:
    out = Path(out) if out else Path(cfg.output.dir) / cfg.name
    res = run_experiment(cfg, out, seed=seed)
    s = res.summary
    print(f"{s['name']}: status={s['status']} epochs={s['epochs']} "
          f"last100_mse={s['last100_mse']:.3e} last100_max={s['last100_max']:.3e} -> {out}")
    return EXIT_OK if res.ok else EXIT_DIVERGED


def _decompose(args) -> int:
    try:
        target = TargetFn(args.target)
    except UnknownTarget as exc:
        raise ConfigError(str(exc)) from None
    if target.dim != 1:
        raise ConfigError(f"decompose works on 1D targets; {args.target} is {target.dim}D")
    try:
        bps = tuple(float(v) for v in args.breakpoints.split(","))
        part = Partition1D(bps)
    except ValueError as exc:
        raise ConfigError(f"--breakpoints: {exc}") from None
    f = target
    grid = np.linspace(bps[0], bps[-1], args.points)
    files = export_components(f, part, grid, args.out)
    err = np.max(np.abs(reconstruct_1d(f, part, grid) - f(grid)))
    print(f"wrote {len(files)} component traces to {args.out}; max reconstruction error {err:.2e}")
    return EXIT_OK


def _pde(args) -> int:
    try:
        spec = parse_net_spec(args.spec)
        seeds = parse_seeds(args.seeds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = pde_sweep(spec, seeds, args.epochs, args.out, mode=args.mode)
    print(",".join(TABLE_HEADER))
    for r in rows:
        print(",".join(str(r[k]) for k in TABLE_HEADER))
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_DIVERGED


def _report(args) -> int:
    print(report(args.dir))
    return EXIT_OK


def _registry(args) -> int:
    if args.action == "list":
        for name, cfg in registry.REGISTRY.items():
            spec = cfg.net_spec()
            print(f"{name:24s} {cfg.target.id:14s} {spec.label:22s} {cfg.train.mode} "
                  f"epochs={cfg.train.epochs}")
        return EXIT_OK
    if not args.name:
        raise ConfigError("registry run needs an experiment name")
    try:
        cfg = registry.get(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    if args.epochs is not None:
        cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
    return _run(cfg, args.out, args.seed)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmnn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="train from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.set_defaults(func=_train)

    d = sub.add_parser("decompose", help="export 1D multi-component traces")
    d.add_argument("--target", required=True)
    d.add_argument("--breakpoints", required=True)
    d.add_argument("--points", type=int, default=1001)
    d.add_argument("--out", default="decomposition")
    d.set_defaults(func=_decompose)

    q = sub.add_parser("pde", help="multi-seed Poisson runs")
    q.add_argument("--spec", required=True, help="WIDTHxRANKxDEPTH, rank '--' for an FCNN")
    q.add_argument("--seeds", default="0..15")
    q.add_argument("--epochs", type=int, required=True)
    q.add_argument("--mode", default="S1")
    q.add_argument("--out", default="pde")
    q.set_defaults(func=_pde)

    r = sub.add_parser("report", help="smoothed curves and difference fields of a run")
    r.add_argument("dir")
    r.set_defaults(func=_report)

    g = sub.add_parser("registry", help="list or run named experiments")
    g.add_argument("action", choices=("list", "run"))
    g.add_argument("name", nargs="?")
    g.add_argument("--seed", type=int)
    g.add_argument("--epochs", type=int, help="override the epoch count")
    g.add_argument("--out")
    g.set_defaults(func=_registry)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    tune_allocator()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
