"""Experiment configuration files.

An INI-style text with five sections; every key is optional unless marked
required below, unknown sections or keys are errors::

    [target]   id (required), s, seed
    [network]  kind, width (required), rank, depth (required), activation,
               residual, zero_bias
    [train]    epochs (required), batch_size (required), schedule
               (step | constant | pde_warmup), lr, gamma, step_len, mode,
               seed, shuffle
    [data]     train_n (required, points per axis), test_n, lo, hi, disk
    [output]   name, dir, snapshot_epochs (comma list), record_wall_time

``ExperimentConfig.to_text`` writes a canonical form, so parse/write round
trips are byte-stable.
"""

from __future__ import annotations

import configparser
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..activations import Activation
from ..nets import Kind, NetworkSpec, Residual, SpecError
from ..optim import Constant, PdeWarmup, StepDecay
from ..targets import TargetFn, UnknownTarget


class ConfigError(ValueError):
    pass


_REQUIRED = object()


@dataclass
class TargetCfg:
    id: str = _REQUIRED
    s: float | None = None
    seed: int | None = None

    def params(self) -> dict:
        return {k: getattr(self, k) for k in ("s", "seed") if getattr(self, k) is not None}


@dataclass
class NetworkCfg:
    width: int = _REQUIRED
    depth: int = _REQUIRED
    kind: str = "mmnn"
    rank: int | None = None
    activation: str = "relu"
    residual: str = "identity"
    zero_bias: bool = False


@dataclass
class TrainCfg:
    epochs: int = _REQUIRED
    batch_size: int = _REQUIRED
    schedule: str = "step"
    lr: float = 0.001
    gamma: float = 0.9
    step_len: int = 400
    mode: str = "S1"
    seed: int = 0
    shuffle: bool = True


@dataclass
class DataCfg:
    train_n: int = _REQUIRED
    test_n: int | None = None
    lo: float = -1.0
    hi: float = 1.0
    disk: bool = False


@dataclass
class OutputCfg:
    name: str = "experiment"
    dir: str = "runs"
    snapshot_epochs: tuple = ()
    record_wall_time: bool = False


_SECTIONS = {"target": TargetCfg, "network": NetworkCfg, "train": TrainCfg,
             "data": DataCfg, "output": OutputCfg}


@dataclass
class ExperimentConfig:
    target: TargetCfg
    network: NetworkCfg
    train: TrainCfg
    data: DataCfg
    output: OutputCfg = field(default_factory=OutputCfg)

    @property
    def name(self) -> str:
        return self.output.name

    # -- derived objects ----------------------------------------------------

    def target_fn(self) -> TargetFn:
        try:
            return TargetFn(self.target.id, self.target.params())
        except (UnknownTarget, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def net_spec(self) -> NetworkSpec:
        n = self.network
        try:
            return NetworkSpec(Kind(n.kind), self.target_fn().dim, 1, n.width,
                               None if n.kind == "fcnn" else n.rank, n.depth,
                               Activation.parse(n.activation), Residual(n.residual), n.zero_bias)
        except (SpecError, ValueError) as exc:
            raise ConfigError(f"[network] {exc}") from None

    def schedule(self):
        t = self.train
        if t.schedule == "step":
            return StepDecay(t.lr, t.gamma, t.step_len)
        if t.schedule == "constant":
            return Constant(t.lr)
        if t.schedule == "pde_warmup":
            return PdeWarmup()
        raise ConfigError(f"[train] unknown schedule {t.schedule!r}")

    def test_n(self) -> int:
        if self.data.test_n is not None:
            return self.data.test_n
        return {1: 2000, 2: 401}.get(self.target_fn().dim, self.data.train_n)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, train=replace(self.train, seed=seed))

    def validate(self) -> "ExperimentConfig":
        self.net_spec()
        self.schedule()
        if self.train.mode.upper() not in ("S1", "S2"):
            raise ConfigError(f"[train] mode must be S1 or S2, got {self.train.mode!r}")
        if self.train.epochs < 0 or self.train.batch_size < 1:
            raise ConfigError("[train] epochs must be >= 0 and batch_size >= 1")
        if self.data.train_n < 2:
            raise ConfigError("[data] train_n must be at least 2")
        if self.data.disk and self.target_fn().dim != 2:
            raise ConfigError("[data] disk filtering needs a 2D target")
        return self

    # -- text form ----------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for sec in _SECTIONS:
            lines.append(f"[{sec}]")
            obj = getattr(self, sec)
            for f in fields(obj):
                v = getattr(obj, f.name)
                if v is None:
                    continue
                lines.append(f"{f.name} = {_fmt(v)}".rstrip())
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, empty_lines_in_values=False)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        unknown = set(cp.sections()) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown section(s) {sorted(unknown)}")
        parts = {}
        for sec, typ in _SECTIONS.items():
            raw = dict(cp[sec]) if cp.has_section(sec) else {}
            parts[sec] = _build(sec, typ, raw)
        return cls(**parts).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return str(v)


def _parse(sec: str, key: str, hint, text: str):
    text = text.strip()
    base = [a for a in typing.get_args(hint) if a is not type(None)]
    t = base[0] if base else hint
    try:
        if t is bool:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(f"expected true/false, got {text!r}")
            return low == "true"
        if t is int:
            return int(text)
        if t is float:
            return float(text)
        if t is tuple:
            return tuple(int(x) for x in text.split(",") if x.strip())
        return text
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key}: {exc}") from None


def _build(sec: str, typ, raw: dict):
    hints = typing.get_type_hints(typ)
    names = {f.name for f in fields(typ)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"[{sec}] unknown key(s) {sorted(unknown)}")
    kw = {}
    for f in fields(typ):
        if f.name in raw:
            kw[f.name] = _parse(sec, f.name, hints[f.name], raw[f.name])
        elif f.default is _REQUIRED:
            raise ConfigError(f"[{sec}] missing required key {f.name!r}")
    return typ(**kw)
