"""Constructive multi-component decompositions in one and two dimensions.

A partition ``x_0 < ... < x_n`` with target intervals ``[a_i, b_i]`` defines
affine maps ``L_i : [a_i, b_i] -> [x_{i-1}, x_i]`` and clamped inverses

    psi_i(x) = s_i relu(x - x_{i-1}) - s_i relu(x - x_i) + a_i,

with slope ``s_i = (b_i - a_i) / (x_i - x_{i-1})``.  Then on ``[x_0, x_n]``

    f(x) = sum_i f_i(psi_i(x)) - sum_{i<n} f(x_i),    f_i = f o L_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .activations import Activation
from .nets import Layer, Network, NetworkSpec, Kind, Skip
from .targets import write_points_csv


class DomainError(ValueError):
    pass


def _relu(x):
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class Partition1D:
    breakpoints: tuple[float, ...]
    targets: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        xs = np.asarray(self.breakpoints, dtype=np.float64)
        if xs.ndim != 1 or len(xs) < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(xs) > 0):
            raise ValueError(f"breakpoints must be strictly increasing: {self.breakpoints}")
        object.__setattr__(self, "breakpoints", tuple(float(v) for v in xs))
        tg = self.targets
        if tg is None:
            tg = ((-1.0, 1.0),) * (len(xs) - 1)
        tg = tuple((float(a), float(b)) for a, b in tg)
        if len(tg) != len(xs) - 1:
            raise ValueError(f"{len(xs) - 1} intervals but {len(tg)} target ranges")
        for a, b in tg:
            if not a < b:
                raise ValueError(f"target range [{a}, {b}] is empty")
        object.__setattr__(self, "targets", tg)
        if not np.all(np.isfinite(self.slopes)):
            raise ValueError("non-finite slope")

    @property
    def n(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def slopes(self) -> np.ndarray:
        xs = np.asarray(self.breakpoints)
        span = np.array([b - a for a, b in self.targets])
        return span / np.diff(xs)

    @classmethod
    def uniform(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "Partition1D":
        return cls(tuple(np.linspace(lo, hi, n + 1)))

    def L(self, i: int, t):
        """Affine map of ``[a_i, b_i]`` onto ``[x_{i-1}, x_i]`` (1-based ``i``)."""
        self._check(i)
        a, _ = self.targets[i - 1]
        return self.breakpoints[i - 1] + (np.asarray(t, dtype=np.float64) - a) / self.slopes[i - 1]

    def _check(self, i):
        if not 1 <= i <= self.n:
            raise IndexError(f"component {i} outside 1..{self.n}")


def psi(p: Partition1D, i: int, x):
    p._check(i)
    s = p.slopes[i - 1]
    a, b = p.targets[i - 1]
    x = np.asarray(x, dtype=np.float64)
    x0, x1 = p.breakpoints[i - 1], p.breakpoints[i]
    # s*relu(x-x0) - s*relu(x-x1) + a, written as a clamp: same function, but
    # monotone in floating point and exactly a / b on the plateaus
    out = np.clip(s * (np.clip(x, x0, x1) - x0) + a, a, b)
    return np.where(x >= x1, b, out)


def component(f: Callable, p: Partition1D, i: int) -> Callable:
    """``f_i = f o L_i``."""
    return lambda t: f(p.L(i, t))


def _check_inside(x, lo, hi, what="x"):
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < lo) | (x > hi)):
        bad = x[(x < lo) | (x > hi)].ravel()[0]
        raise DomainError(f"{what}={bad} outside [{lo}, {hi}]")
    return x


def reconstruct_1d(f: Callable, p: Partition1D, x):
    x = _check_inside(x, p.breakpoints[0], p.breakpoints[-1])
    total = np.zeros_like(x)
    for i in range(1, p.n + 1):
        total = total + component(f, p, i)(psi(p, i, x))
    for xi in p.breakpoints[1:-1]:
        total = total - f(np.float64(xi))
    return total


def two_component_demo(f: Callable, x):
    """``f(relu(2x)/2) + f(-relu(-2x)/2) - f(0)``, equal to ``f`` on [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    return f(_relu(2 * x) / 2) + f(-_relu(-2 * x) / 2) - f(np.float64(0.0))


def psi_layer(p: Partition1D, i: int, dtype=np.float32) -> Network:
    """A width-2, rank-1 ReLU layer whose output is exactly ``psi_i``."""
    p._check(i)
    s = p.slopes[i - 1]
    a, _ = p.targets[i - 1]
    spec = NetworkSpec(Kind.MMNN, 1, 1, 2, 1, 1, Activation.RELU)
    layer = Layer(W=np.ones((2, 1), dtype), b=-np.array(p.breakpoints[i - 1:i + 1], dtype),
                  A=np.array([[s, -s]], dtype), c=np.array([a], dtype), skip=Skip.NONE)
    return Network(spec, [layer])


# ---------------------------------------------------------------------------
# 2D

@dataclass(frozen=True)
class Partition2D:
    x: Partition1D
    y: Partition1D


def reconstruct_2d(f: Callable, p: Partition2D, x, y):
    """Four-sum reconstruction of ``f(x, y)``; ``f`` takes two arrays."""
    px, py = p.x, p.y
    x = _check_inside(x, px.breakpoints[0], px.breakpoints[-1], "x")
    y = _check_inside(y, py.breakpoints[0], py.breakpoints[-1], "y")
    x, y = np.broadcast_arrays(x, y)
    n, m = px.n, py.n
    ps = [psi(px, i, x) for i in range(1, n + 1)]
    ph = [psi(py, j, y) for j in range(1, m + 1)]
    Lx = [px.L(i, ps[i - 1]) for i in range(1, n + 1)]
    Ly = [py.L(j, ph[j - 1]) for j in range(1, m + 1)]
    xs, ys = px.breakpoints, py.breakpoints
    total = np.zeros(x.shape)
    for i in range(n):
        for j in range(m):
            total += f(Lx[i], Ly[j])
    for i in range(n):
        for j in range(1, m):
            total -= f(Lx[i], np.full(x.shape, ys[j]))
    for i in range(1, n):
        for j in range(m):
            total -= f(np.full(x.shape, xs[i]), Ly[j])
    for i in range(1, n):
        for j in range(1, m):
            total += f(np.float64(xs[i]), np.float64(ys[j]))
    return total


# ---------------------------------------------------------------------------

def export_components(f: Callable, p: Partition1D, grid, out_dir) -> list[Path]:
    """Write ``f_i.csv`` (f_i on [a_i, b_i]) and ``psi_i.csv`` (psi_i on ``grid``).

    Each file has columns ``x,value``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.asarray(grid, dtype=np.float64)
    written = []
    for i in range(1, p.n + 1):
        a, b = p.targets[i - 1]
        t = np.linspace(a, b, len(grid))
        path = out / f"f_{i}.csv"
        write_points_csv(path, t[:, None], component(f, p, i)(t), "value", ["x"])
        written.append(path)
        path = out / f"psi_{i}.csv"
        write_points_csv(path, grid[:, None], psi(p, i, grid), "value", ["x"])
        written.append(path)
    return written
