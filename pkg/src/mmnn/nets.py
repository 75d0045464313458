"""MMNN, ResMMNN and FCNN architectures.

Every network is a list of :class:`Layer` objects computing

    h(x) = A sigma(W x + b) + c

where ``(W, b)`` are the inner (random-feature) parameters and ``(A, c)`` the
outer parameters.  An FCNN reuses the same block with ``A = c = None`` on its
hidden layers; its final affine map is the outer part of its last layer, so
an FCNN of depth ``l`` has ``l`` hidden layers and ``l + 1`` affine maps.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .activations import Activation, sigma
from .core import DTYPE, Rng, ShapeError, init_uniform_fan_in


class Kind(str, Enum):
    MMNN = "mmnn"
    RESMMNN = "resmmnn"
    FCNN = "fcnn"


class Residual(str, Enum):
    IDENTITY = "identity"
    OPLUS = "oplus"


class Skip(str, Enum):
    NONE = "none"
    IDENTITY = "identity"
    OPLUS = "oplus"


class SpecError(ValueError):
    """Invalid architecture description."""


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    kind: Kind
    d_in: int
    d_out: int
    width: int
    rank: int | None
    depth: int
    activation: Activation = Activation.RELU
    residual: Residual = Residual.IDENTITY
    zero_bias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "activation", Activation.parse(self.activation))
        object.__setattr__(self, "residual", Residual(self.residual))
        self.validate()

    def validate(self) -> None:
        if min(self.d_in, self.d_out, self.width, self.depth) < 1:
            raise SpecError(f"all sizes must be positive: {self}")
        if self.kind is Kind.FCNN:
            return
        if self.rank is None or self.rank < 1:
            raise SpecError(f"{self.kind.value} needs a positive rank")
        if self.rank >= self.width:
            raise SpecError(
                f"rank {self.rank} >= width {self.width}: an MMNN layer must have "
                "fewer components than random features")
        if self.kind is Kind.RESMMNN and self.depth < 2:
            raise SpecError("a ResMMNN needs depth >= 2")

    @property
    def label(self) -> str:
        r = "--" if self.rank is None else str(self.rank)
        return f"{self.kind.value.upper()}({self.width},{r},{self.depth})"

    def dims(self) -> list[int]:
        """Input/output dimensions d_0, ..., d_l of the layer chain."""
        if self.kind is Kind.FCNN:
            return [self.d_in] + [self.width] * (self.depth - 1) + [self.d_out]
        return [self.d_in] + [self.rank] * (self.depth - 1) + [self.d_out]


@dataclass
class Layer:
    W: np.ndarray
    b: np.ndarray
    A: np.ndarray | None = None
    c: np.ndarray | None = None
    skip: Skip = Skip.NONE

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def d_prev(self) -> int:
        return self.W.shape[1]

    @property
    def d(self) -> int:
        return self.n if self.A is None else self.A.shape[0]

    def check(self) -> None:
        n, d_prev = self.W.shape
        if self.b.shape != (n,):
            raise ShapeError(f"b has shape {self.b.shape}, expected ({n},)")
        if (self.A is None) != (self.c is None):
            raise ShapeError("A and c must both be present or both absent")
        if self.A is not None:
            if self.A.ndim != 2 or self.A.shape[1] != n:
                raise ShapeError(f"A has shape {self.A.shape}, expected (d, {n})")
            if self.c.shape != (self.A.shape[0],):
                raise ShapeError(f"c has shape {self.c.shape}, expected ({self.A.shape[0]},)")


INNER = ("W", "b")
OUTER = ("A", "c")


@dataclass
class Network:
    spec: NetworkSpec
    layers: list[Layer] = field(default_factory=list)

    @property
    def dtype(self):
        return self.layers[0].W.dtype

    @property
    def activation(self) -> Activation:
        return self.spec.activation

    def tensors(self):
        """Yield ``((layer_index, name), array)`` in checkpoint order."""
        for i, layer in enumerate(self.layers):
            for name in ("W", "b", "A", "c"):
                arr = getattr(layer, name)
                if arr is not None:
                    yield (i, name), arr

    def trainable_keys(self, mode: str = "S1") -> list[tuple[int, str]]:
        """Keys optimized under strategy ``mode``.

        S1 trains only the outer (A, c) tensors of an MMNN; an FCNN and S2 train
        everything.
        """
        mode = mode.upper()
        if mode not in ("S1", "S2"):
            raise ValueError(f"mode must be S1 or S2, got {mode!r}")
        if self.spec.kind is Kind.FCNN or mode == "S2":
            return [k for k, _ in self.tensors()]
        return [k for k, _ in self.tensors() if k[1] in OUTER]

    def params(self, mode: str = "S1") -> dict[tuple[int, str], np.ndarray]:
        keys = set(self.trainable_keys(mode))
        return {k: v for k, v in self.tensors() if k in keys}

    def astype(self, dtype) -> "Network":
        layers = [
            replace(L, W=L.W.astype(dtype), b=L.b.astype(dtype),
                    A=None if L.A is None else L.A.astype(dtype),
                    c=None if L.c is None else L.c.astype(dtype))
            for L in self.layers
        ]
        return Network(self.spec, layers)

    def copy(self) -> "Network":
        return self.astype(self.dtype)

    def __call__(self, X):
        return forward(self, X)


def _skips(spec: NetworkSpec) -> list[Skip]:
    m = spec.depth
    if spec.kind is not Kind.RESMMNN:
        return [Skip.NONE] * m
    if spec.residual is Residual.OPLUS:
        return [Skip.OPLUS] * m
    return [Skip.NONE] + [Skip.IDENTITY] * (m - 2) + [Skip.NONE]


def build_network(spec: NetworkSpec, rng: Rng, dtype=DTYPE) -> Network:
    """Initialize every tensor from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    ``fan_in`` is the input dimension of the affine map owning the tensor; with
    ``spec.zero_bias`` the inner biases b start at zero instead.
    """
    rng = rng.stream("init")
    dims = spec.dims()
    layers = []
    for i, skip in enumerate(_skips(spec)):
        d_prev, d = dims[i], dims[i + 1]
        n = spec.width
        W = init_uniform_fan_in(rng, n, d_prev, d_prev, dtype)
        b = init_uniform_fan_in(rng, n, None, d_prev, dtype)
        if spec.zero_bias:
            b[:] = 0
        if spec.kind is Kind.FCNN and i < spec.depth - 1:
            A = c = None
        else:
            A = init_uniform_fan_in(rng, d, n, n, dtype)
            c = init_uniform_fan_in(rng, d, None, n, dtype)
        layer = Layer(W, b, A, c, skip)
        layer.check()
        layers.append(layer)
    return Network(spec, layers)


def oplus(f_out: np.ndarray, g_out: np.ndarray) -> np.ndarray:
    """Zero-pad both operands to a common length, add, keep ``len(g_out)``.

    Works on the last axis, so batches of vectors are accepted.
    """
    f_out = np.asarray(f_out)
    g_out = np.asarray(g_out)
    k = g_out.shape[-1]
    out = g_out.copy()
    m = min(k, f_out.shape[-1])
    out[..., :m] += f_out[..., :m]
    return out


def layer_forward(layer: Layer, act: Activation, x: np.ndarray):
    """Return ``(z, a, out)`` for one layer on a batch ``x`` of shape (B, d_prev)."""
    z = x @ layer.W.T
    z += layer.b
    a = sigma(act, z)
    h = a if layer.A is None else a @ layer.A.T + layer.c
    if layer.skip is Skip.IDENTITY:
        h = h + x
    elif layer.skip is Skip.OPLUS:
        h = oplus(x, h)
    return z, a, h


def as_batch(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=net.dtype)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if net.spec.d_in == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != net.spec.d_in:
        raise ShapeError(f"input has shape {X.shape}, network expects (B, {net.spec.d_in})")
    return X


def forward(net: Network, X, check_finite: bool = True) -> np.ndarray:
    """Evaluate the network on a batch of shape (B, d_in); returns (B, d_out)."""
    h = as_batch(net, X)
    act = net.activation
    for i, layer in enumerate(net.layers):
        _, _, h = layer_forward(layer, act, h)
        if check_finite and not np.isfinite(h).all():
            raise NonFiniteError(f"non-finite output in layer {i}")
    return h


def forward_chunked(net: Network, X, chunk: int = 65536) -> np.ndarray:
    X = as_batch(net, X)
    if len(X) <= chunk:
        return forward(net, X)
    return np.concatenate([forward(net, X[s:s + chunk]) for s in range(0, len(X), chunk)])


def count_params(net: Network) -> tuple[int, int]:
    """Return (trained under S1, total).  Every FCNN parameter is trained."""
    total = sum(v.size for _, v in net.tensors())
    if net.spec.kind is Kind.FCNN:
        return total, total
    trained = sum(v.size for k, v in net.tensors() if k[1] in OUTER)
    return trained, total


def count_spec_params(spec: NetworkSpec) -> tuple[int, int]:
    """Closed-form parameter counts of ``spec`` without allocating it."""
    dims = spec.dims()
    n = spec.width
    inner = sum(n * (dims[i] + 1) for i in range(spec.depth))
    if spec.kind is Kind.FCNN:
        total = inner + dims[-1] * (n + 1)
        return total, total
    outer = sum(dims[i + 1] * (n + 1) for i in range(spec.depth))
    return outer, inner + outer


# ---------------------------------------------------------------------------
# checkpoints

MAGIC = b"MMNN1\0"
_KIND_CODES = {Kind.MMNN: 0, Kind.RESMMNN: 1, Kind.FCNN: 2}
_SKIP_FLAGS = {Skip.NONE: 0, Skip.IDENTITY: 2, Skip.OPLUS: 4}
_HAS_OUTER = 1
_ZERO_BIAS = 8


class CheckpointError(ValueError):
    pass


def save_network(net: Network, path) -> None:
    """Write ``net`` as little-endian float32 payload behind a u32 header.

    Layout: ``MMNN1\\0``, then u32 (kind, activation, depth, d_in, d_out,
    width, rank-or-0), then per layer u32 (n, d_prev, d, flags), then W, b, A, c
    of every layer in order, row-major float32.
    """
    spec = net.spec
    head = [_KIND_CODES[spec.kind], spec.activation.code, spec.depth, spec.d_in,
            spec.d_out, spec.width, spec.rank or 0]
    for L in net.layers:
        flags = _SKIP_FLAGS[L.skip] | (_HAS_OUTER if L.A is not None else 0)
        if spec.zero_bias:
            flags |= _ZERO_BIAS
        head += [L.n, L.d_prev, L.d, flags]
    payload = b"".join(np.ascontiguousarray(v, dtype="<f4").tobytes() for _, v in net.tensors())
    data = MAGIC + struct.pack(f"<{len(head)}I", *head) + payload
    Path(path).write_bytes(data)


def load_network(path) -> Network:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError("bad magic; not an MMNN checkpoint")
    pos = len(MAGIC)

    def take_u32(count):
        nonlocal pos
        end = pos + 4 * count
        if end > len(data):
            raise CheckpointError("truncated header")
        vals = struct.unpack(f"<{count}I", data[pos:end])
        pos = end
        return vals

    kind_code, act_code, depth, d_in, d_out, width, rank = take_u32(7)
    kinds = {v: k for k, v in _KIND_CODES.items()}
    if kind_code not in kinds or act_code >= len(Activation) or depth < 1:
        raise CheckpointError("corrupt header")
    quads = [take_u32(4) for _ in range(depth)]
    zero_bias = bool(quads[0][3] & _ZERO_BIAS)
    residual = Residual.OPLUS if any(q[3] & _SKIP_FLAGS[Skip.OPLUS] for q in quads) else Residual.IDENTITY
    try:
        spec = NetworkSpec(kinds[kind_code], d_in, d_out, width, rank or None, depth,
                           Activation.from_code(act_code), residual, zero_bias)
    except SpecError as exc:
        raise CheckpointError(f"corrupt header: {exc}") from None

    def take_f32(shape):
        nonlocal pos
        count = int(np.prod(shape))
        end = pos + 4 * count
        if end > len(data):
            raise CheckpointError("truncated payload")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).astype(DTYPE).reshape(shape)
        pos = end
        return arr

    skip_of = {v: k for k, v in _SKIP_FLAGS.items()}
    layers = []
    for n, d_prev, d, flags in quads:
        W = take_f32((n, d_prev))
        b = take_f32((n,))
        A = c = None
        if flags & _HAS_OUTER:
            A = take_f32((d, n))
            c = take_f32((d,))
        layer = Layer(W, b, A, c, skip_of.get(flags & 6, Skip.NONE))
        layers.append(layer)
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after payload")
    net = Network(spec, layers)
    dims = spec.dims()
    for i, L in enumerate(layers):
        if L.d_prev != dims[i] or L.d != dims[i + 1]:
            raise CheckpointError(f"layer {i} shape does not match the header spec")
    return net
