"""Named experiments with the published training recipes."""

from __future__ import annotations

from ..activations import Activation
from .config import DataCfg, ExperimentConfig, NetworkCfg, OutputCfg, TargetCfg, TrainCfg


def _exp(name, target, net, *, n, batch, epochs, lr=0.001, gamma=0.9, step=400,
         schedule="step", mode="S1", disk=False, s=None, snapshots=()):
    return ExperimentConfig(
        TargetCfg(target, s=s),
        NetworkCfg(**net),
        TrainCfg(epochs, batch, schedule, lr, gamma, step, mode),
        DataCfg(n, disk=disk),
        OutputCfg(name=name, snapshot_epochs=tuple(snapshots)),
    )


def _mm(w, r, l, **kw):
    return dict(kind="mmnn", width=w, rank=r, depth=l, **kw)


def _res(w, r, l, **kw):
    return dict(kind="resmmnn", width=w, rank=r, depth=l, **kw)


def _fc(w, l, **kw):
    return dict(kind="fcnn", width=w, depth=l, **kw)


_1D = dict(n=1000, batch=100)
_F2 = dict(n=600, batch=1000, epochs=800, step=16, s=2.0)


def _build() -> dict[str, ExperimentConfig]:
    e = {}

    def add(cfg):
        e[cfg.name] = cfg

    for tag, net in (("mmnn1", (400, 20, 6)), ("mmnn2", (590, 28, 6))):
        for mode in ("S1", "S2"):
            add(_exp(f"table1-{tag}-{mode.lower()}", "Osc1D_cos36", _mm(*net), epochs=20000,
                     mode=mode, **_1D))
    for mode in ("S1", "S2"):
        add(_exp(f"table2-f1-mmnn-{mode.lower()}", "F1", _mm(388, 18, 6), epochs=20000, mode=mode, **_1D))
        add(_exp(f"fig5-f2-mmnn2-{mode.lower()}", "F2s", _mm(789, 36, 12), mode=mode, **_F2))
    add(_exp("table2-f1-fcnn-83", "F1", _fc(83, 6), epochs=20000, **_1D))
    add(_exp("table2-f1-fcnn-120", "F1", _fc(120, 6), epochs=20000, **_1D))
    add(_exp("fig5-f2-fcnn-168", "F2s", _fc(168, 12), **_F2))
    add(_exp("fig5-f2-fcnn-240", "F2s", _fc(240, 12), **_F2))

    add(_exp("arctan", "Arctan", _mm(16, 4, 3), epochs=2000, schedule="constant", **_1D))
    add(_exp("local-sine", "LocalSine", _mm(16, 4, 3, zero_bias=True), epochs=20000,
             lr=0.002, gamma=0.95, step=1000, **_1D))
    add(_exp("polar-spikes", "PolarSpikes2D", _mm(100, 10, 6), n=400, batch=1000,
             epochs=1000, step=25))
    add(_exp("sine50", "Sine50", _res(800, 40, 15), epochs=40000, lr=1e-4, step=800, **_1D))
    add(_exp("f2s3", "F2s", _res(600, 30, 15), n=400, batch=1000, epochs=2000, step=40, s=3.0))
    add(_exp("f2s3-disk", "F2s", _res(600, 30, 15), n=452, batch=1000, epochs=2000, step=40,
             s=3.0, disk=True))
    add(_exp("sine-pow", "SinePow", _mm(600, 30, 8), epochs=10000, step=200, **_1D))
    add(_exp("polar-blob", "PolarBlob2D", _mm(500, 20, 8), n=600, batch=1000, epochs=300, step=6))
    add(_exp("porous-mmnn1", "Porous2D", _mm(256, 12, 6), n=600, batch=1000, epochs=1600, step=20))
    add(_exp("porous-mmnn2", "Porous2D", _mm(1024, 32, 6), n=600, batch=1000, epochs=1600, step=20))
    add(_exp("spiky-ball", "SpikyBall3D", _mm(600, 20, 8), n=111, batch=999, epochs=300,
             lr=0.0005, step=6))
    add(_exp("gauss4d", "Gauss4D", _mm(500, 12, 6), n=35, batch=35 ** 2, epochs=300, step=6))
    return e


REGISTRY: dict[str, ExperimentConfig] = _build()

# the Poisson solver runs through ``mmnn pde``; these are its published network sizes
PDE_NETWORKS = {"mmnn1": "301x16x6", "mmnn2": "503x20x6", "fcnn": "100x--x6"}
PDE_ACTIVATION = Activation.SINE


def get(name: str) -> ExperimentConfig:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"no registry entry {name!r}; see `mmnn registry list`") from None
