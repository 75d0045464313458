"""Target functions, uniform grids and datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Rng

PI = np.pi


class UnknownTarget(KeyError):
    pass


# ---------------------------------------------------------------------------
# 1D targets, x has shape (N, 1)

def _osc_cos36(X):
    x2 = X[:, 0] ** 2
    return np.cos(36 * PI * x2) - 0.6 * np.cos(12 * PI * x2)


def _f1(X):
    a = np.abs(X[:, 0])
    return np.cos(20 * PI * a ** 1.4) + 0.5 * np.cos(12 * PI * a ** 1.6)


def _arctan(X):
    return np.arctan(100 * X[:, 0] + 20)


def _local_sine(X):
    x = X[:, 0]
    return np.where(np.abs(x + 0.2) < 0.02, np.sin(50 * PI * x), 0.0)


def _runge1000(X):
    return 1.0 / (1000 * X[:, 0] ** 2 + 1)


def _cos_sin_mix(X):
    x = X[:, 0]
    return np.cos(6 * PI * x) ** 2 + np.sin(10 * PI * x * x)


def _sine50(X):
    return np.sin(50 * PI * X[:, 0])


def _sine_pow(X):
    return np.sin(36 * PI * np.abs(X[:, 0]) ** 1.5)


# ---------------------------------------------------------------------------
# 2D and higher

F2_A = np.array([[0.3, 0.2], [0.2, 0.3]])
F2_B = np.array([2 * PI, 4 * PI])
F2_C = np.array([[2 * PI, 4 * PI], [8 * PI, 4 * PI]])
F2_D = np.array([[4 * PI, 6 * PI], [8 * PI, 6 * PI]])


def _f2s(X, s: float = 2.0):
    out = np.zeros(len(X))
    for i in range(2):
        xi = X[:, i]
        for j in range(2):
            xj = X[:, j]
            out += F2_A[i, j] * np.sin(s * F2_B[i] * xi + s * F2_C[i, j] * xi * xj) \
                * np.cos(s * F2_B[j] * xj + s * F2_D[i, j] * xi * xi)
    return out


def polar_angle(x, y):
    """atan2 mapped to [0, 2pi); 0 at the origin."""
    th = np.arctan2(y, x)
    th = np.where(th < 0, th + 2 * PI, th)
    return np.where((x == 0) & (y == 0), 0.0, th)


def _clamp_profile(r, rho, scale):
    return np.clip(0.5 + scale * rho - scale * r, 0.0, 1.0)


def _polar_spikes(X, k: float = 8.0):
    # eight spikes, cos(8 theta); k = 8 pi gives the literal printed form, whose
    # 72^2 bilinear interpolation error (max ~0.92) disagrees with the reported 0.31
    x, y = X[:, 0], X[:, 1]
    rho = 0.1 + 0.02 * np.cos(k * polar_angle(x, y))
    return _clamp_profile(np.hypot(x, y), rho, 25.0)


def _polar_blob(X):
    x, y = X[:, 0], X[:, 1]
    th = polar_angle(x, y)
    rho = 0.5 + 0.1 * np.cos(PI ** 2 * th ** 2)
    return _clamp_profile(np.hypot(x, y), rho, 5.0)


def _spiky_ball(X):
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    with np.errstate(invalid="ignore", divide="ignore"):
        th = np.where(r > 0, np.arccos(np.clip(z / np.where(r > 0, r, 1), -1, 1)), 0.0)
    ph = polar_angle(x, y)
    rho = 0.5 + 0.2 * np.sin(6 * th) * np.cos(6 * ph) * np.sin(th) ** 2
    return _clamp_profile(r, rho, 5.0)


GAUSS4D_PRECISION = 20.0 * np.array([
    [1.0, 0.9, 0.8, 0.7],
    [0.9, 2.0, 1.9, 1.8],
    [0.8, 1.9, 3.0, 2.9],
    [0.7, 1.8, 2.9, 4.0],
])


def gauss4d_norm() -> float:
    # det(Sigma) = 1 / det(Sigma^-1)
    return float(np.sqrt(np.linalg.det(GAUSS4D_PRECISION) / (2 * PI) ** 4))


def _gauss4d(X):
    q = np.einsum("ni,ij,nj->n", X, GAUSS4D_PRECISION, X)
    return gauss4d_norm() * np.exp(-0.5 * q)


def _poisson_exact(X):
    x, y = X[:, 0], X[:, 1]
    return np.sin(7 * PI * x) * np.sin(8 * PI * y) + np.sin(6 * PI * x) * np.sin(9 * PI * y)


def _poisson_rhs(X):
    # -Laplacian of the exact solution: (7^2+8^2) pi^2 and (6^2+9^2) pi^2
    x, y = X[:, 0], X[:, 1]
    return 113 * PI ** 2 * np.sin(7 * PI * x) * np.sin(8 * PI * y) \
        + 117 * PI ** 2 * np.sin(6 * PI * x) * np.sin(9 * PI * y)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Entry:
    dim: int
    fn: Callable
    params: tuple = ()


_TARGETS: dict[str, _Entry] = {
    "Osc1D_cos36": _Entry(1, _osc_cos36),
    "F1": _Entry(1, _f1),
    "F2s": _Entry(2, _f2s, ("s",)),
    "Arctan": _Entry(1, _arctan),
    "LocalSine": _Entry(1, _local_sine),
    "Runge1000": _Entry(1, _runge1000),
    "CosSinMix": _Entry(1, _cos_sin_mix),
    "Sine50": _Entry(1, _sine50),
    "SinePow": _Entry(1, _sine_pow),
    "PolarSpikes2D": _Entry(2, _polar_spikes, ("k",)),
    "PolarBlob2D": _Entry(2, _polar_blob),
    "SpikyBall3D": _Entry(3, _spiky_ball),
    "Gauss4D": _Entry(4, _gauss4d),
    "PoissonExact2D": _Entry(2, _poisson_exact),
    "PoissonRhs2D": _Entry(2, _poisson_rhs),
}


def target_ids() -> list[str]:
    return sorted(_TARGETS) + ["Porous2D"]


@dataclass(frozen=True)
class TargetFn:
    """A named target with its parameters; callable on an (N, d) batch."""

    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id == "Porous2D":
            return
        if self.id not in _TARGETS:
            raise UnknownTarget(f"unknown target {self.id!r}; known: {', '.join(target_ids())}")
        extra = set(self.params) - set(_TARGETS[self.id].params)
        if extra:
            raise ValueError(f"target {self.id} takes no parameter(s) {sorted(extra)}")

    @property
    def dim(self) -> int:
        return 2 if self.id == "Porous2D" else _TARGETS[self.id].dim

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_1d(np.asarray(X, dtype=np.float64))
        if X.ndim == 1:
            X = X.reshape(-1, self.dim) if self.dim > 1 else X[:, None]
        if X.shape[1] != self.dim:
            raise ValueError(f"{self.id} expects {self.dim}-d points, got {X.shape[1]}")
        if self.id == "Porous2D":
            return porous_target(**self.params)(X)
        return _TARGETS[self.id].fn(X, **self.params)

    def __hash__(self):
        return hash((self.id, tuple(sorted(self.params.items()))))


def eval_target(id: str, x, **params) -> float | np.ndarray:
    """Evaluate a target at one point (a d-vector) or a batch (N, d)."""
    t = TargetFn(id, params)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        return float(t(x.reshape(1, -1))[0])
    return t(x)


# ---------------------------------------------------------------------------
# porous stand-in

def porous_target(seed: int = 0, holes: int = 40, r_min: float = 0.03,
                  r_max: float = 0.12) -> Callable:
    """A smooth base function zeroed inside randomly placed discs.

    Only a seeded stand-in for image-like porous targets; the hole layout is
    drawn from the ``porous`` stream of ``seed``.
    """
    rng = Rng(seed).stream("porous")
    centres = rng.uniform(-1.0, 1.0, (holes, 2))
    radii = rng.uniform(r_min, r_max, holes)

    def f(X):
        X = np.asarray(X, dtype=np.float64)
        x, y = X[:, 0], X[:, 1]
        base = 0.5 + 0.25 * np.sin(2 * PI * x) * np.cos(3 * PI * y) + 0.2 * x * y
        d2 = (x[:, None] - centres[:, 0]) ** 2 + (y[:, None] - centres[:, 1]) ** 2
        inside = (d2 <= radii ** 2).any(axis=1)
        return np.where(inside, 0.0, base)

    return f


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class Domain:
    lo: float = -1.0
    hi: float = 1.0
    dim: int = 1
    disk_radius: float | None = None

    def contains(self, X) -> np.ndarray:
        X = np.asarray(X)
        ok = ((X >= self.lo) & (X <= self.hi)).all(axis=1)
        if self.disk_radius is not None:
            ok &= (X ** 2).sum(axis=1) <= self.disk_radius ** 2
        return ok


@dataclass
class Dataset:
    inputs: np.ndarray   # (N, d)
    outputs: np.ndarray  # (N, 1)
    domain: Domain
    shape: tuple | None = None  # grid shape when the points form a tensor grid

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ValueError(f"{len(self.inputs)} inputs vs {len(self.outputs)} outputs")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def astype(self, dtype) -> "Dataset":
        return Dataset(self.inputs.astype(dtype), self.outputs.astype(dtype), self.domain, self.shape)

    def subset(self, mask) -> "Dataset":
        return Dataset(self.inputs[mask], self.outputs[mask], self.domain, None)

    def to_csv(self, path) -> None:
        write_points_csv(path, self.inputs, self.outputs[:, 0])

    @classmethod
    def from_csv(cls, path, domain: Domain | None = None) -> "Dataset":
        X, y = read_points_csv(path)
        return cls(X, y[:, None], domain or Domain(dim=X.shape[1]))


def write_points_csv(path, X, y, value_name: str = "y", coord_names=None) -> None:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    d = X.shape[1]
    names = list(coord_names) if coord_names else [f"x{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [value_name])
        for row, v in zip(X, y):
            w.writerow([repr(float(a)) for a in row] + [repr(float(v))])


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]


def _fill(points, target, domain, shape=None) -> Dataset:
    y = np.zeros(len(points)) if target is None else target(points)
    return Dataset(points, np.asarray(y, dtype=np.float64)[:, None], domain, shape)


def _as_target(target):
    if target is None or callable(target):
        return target
    return TargetFn(target)


def grid_1d(n: int, lo: float = -1.0, hi: float = 1.0, target=None) -> Dataset:
    if n < 2:
        raise ValueError("a grid needs at least 2 points per axis")
    x = np.linspace(lo, hi, n)
    return _fill(x[:, None], _as_target(target), Domain(lo, hi, 1), (n,))


def grid_nd(n: int, d: int, lo: float = -1.0, hi: float = 1.0, target=None) -> Dataset:
    """Tensor grid with ``n`` points per axis; the last coordinate varies fastest."""
    if n < 2:
        raise ValueError("a grid needs at least 2 points per axis")
    axis = np.linspace(lo, hi, n)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return _fill(pts, _as_target(target), Domain(lo, hi, d), (n,) * d)


def grid_2d(n: int, lo: float = -1.0, hi: float = 1.0, target=None) -> Dataset:
    return grid_nd(n, 2, lo, hi, target)


def disk_filter(ds: Dataset, radius: float = 1.0) -> Dataset:
    if ds.dim != 2:
        raise ValueError("disk_filter needs a 2D dataset")
    keep = (ds.inputs ** 2).sum(axis=1) <= radius * radius
    out = ds.subset(keep)
    out.domain = Domain(ds.domain.lo, ds.domain.hi, 2, radius)
    return out
