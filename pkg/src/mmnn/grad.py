"""Hand-derived reverse mode and input-derivative jets for the layer algebra.

Two jet flavours are provided:

* :func:`forward_jet` carries value, input Jacobian and full input Hessian.
  It is the reference for small checks.
* the Laplacian jet (:func:`lap_jet_forward` / :func:`lap_jet_backward`)
  carries value, input gradient and Laplacian stacked in one array of shape
  ``(d_in + 2, B, d)``.  That is all a Poisson residual needs, and its adjoint
  gives exact parameter gradients of residual losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import jet_act_backward, jet_act_forward
from .activations import Activation, derivatives, dsigma
from .nets import Layer, Network, NonFiniteError, Skip, as_batch, layer_forward

Key = tuple[int, str]


@dataclass
class GradBag:
    grads: dict[Key, np.ndarray]
    mode: str

    def __getitem__(self, key: Key) -> np.ndarray:
        return self.grads[key]

    def __contains__(self, key) -> bool:
        return key in self.grads

    def keys(self):
        return self.grads.keys()

    def items(self):
        return self.grads.items()

    def __len__(self):
        return len(self.grads)


@dataclass
class Jet2:
    value: np.ndarray  # (d,)
    grad: np.ndarray  # (d, d_in)
    hess: np.ndarray  # (d, d_in, d_in)


def _wanted(net: Network, mode: str) -> set[Key]:
    return set(net.trainable_keys(mode))


# ---------------------------------------------------------------------------
# plain reverse mode

def _forward_cache(net: Network, X: np.ndarray):
    cache = []
    h = X
    for layer in net.layers:
        z, a, out = layer_forward(layer, net.activation, h)
        cache.append((h, z, a))
        h = out
    return h, cache


def _skip_grad(layer: Layer, g_x: np.ndarray, g_out: np.ndarray) -> None:
    if layer.skip is Skip.IDENTITY:
        g_x += g_out
    elif layer.skip is Skip.OPLUS:
        m = min(g_x.shape[-1], g_out.shape[-1])
        g_x[..., :m] += g_out[..., :m]


def _backward(net: Network, cache, g_out: np.ndarray, wanted: set[Key]) -> dict[Key, np.ndarray]:
    grads: dict[Key, np.ndarray] = {}
    act = net.activation
    for i in range(len(net.layers) - 1, -1, -1):
        L = net.layers[i]
        x, z, a = cache[i]
        if L.A is not None:
            if (i, "A") in wanted:
                grads[(i, "A")] = g_out.T @ a
            if (i, "c") in wanted:
                grads[(i, "c")] = g_out.sum(axis=0)
            g_a = g_out @ L.A
        else:
            g_a = g_out
        need_inner = (i, "W") in wanted or (i, "b") in wanted
        if i == 0 and not need_inner:
            break
        g_z = g_a * dsigma(act, z)
        if (i, "W") in wanted:
            grads[(i, "W")] = g_z.T @ x
        if (i, "b") in wanted:
            grads[(i, "b")] = g_z.sum(axis=0)
        if i > 0:
            g_x = g_z @ L.W
            _skip_grad(L, g_x, g_out)
            g_out = g_x
    return grads


def mse_loss(net: Network, X, Y) -> float:
    X = as_batch(net, X)
    out, _ = _forward_cache(net, X)
    Y = np.asarray(Y, dtype=out.dtype).reshape(out.shape)
    diff = out - Y
    return float(np.mean(np.square(diff, dtype=np.float64)))


def backprop_mse(net: Network, X, Y, mode: str = "S1") -> tuple[float, GradBag]:
    """Mean squared error over batch and outputs, with exact gradients.

    Only the tensors trained under ``mode`` receive gradients.
    """
    X = as_batch(net, X)
    if len(X) == 0:
        raise ValueError("empty batch")
    out, cache = _forward_cache(net, X)
    Y = np.asarray(Y, dtype=out.dtype)
    if Y.size != out.size:
        raise ValueError(f"targets have shape {Y.shape}, outputs {out.shape}")
    diff = out - Y.reshape(out.shape)
    sq = np.square(diff, dtype=np.float64)
    loss = float(np.mean(sq))
    if not np.isfinite(loss):
        bad = np.flatnonzero(~np.isfinite(sq.sum(axis=1)))[0]
        raise NonFiniteError(f"non-finite loss; first offending batch index {bad}")
    g = diff * out.dtype.type(2.0 / diff.size)
    return loss, GradBag(_backward(net, cache, g, _wanted(net, mode)), mode.upper())


# ---------------------------------------------------------------------------
# full second-order jet

def forward_jet_batch(net: Network, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value (B, d_out), Jacobian (B, d_out, D) and Hessian (B, d_out, D, D)."""
    X = as_batch(net, X)
    B, D = X.shape
    act = net.activation
    h = X
    G = np.broadcast_to(np.eye(D, dtype=X.dtype), (B, D, D)).copy()
    H = np.zeros((B, D, D, D), dtype=X.dtype)
    for layer in net.layers:
        z, a, out = layer_forward(layer, act, h)
        _, s1, s2 = derivatives(act, z, 2)
        zg = layer.W @ G  # (B, n, D)
        zh = (layer.W @ H.reshape(B, layer.d_prev, D * D)).reshape(B, layer.n, D, D)
        ag = s1[..., None] * zg
        ah = s1[..., None, None] * zh + s2[..., None, None] * zg[..., :, None] * zg[..., None, :]
        if layer.A is not None:
            og = layer.A @ ag
            oh = (layer.A @ ah.reshape(B, layer.n, D * D)).reshape(B, layer.d, D, D)
        else:
            og, oh = ag, ah
        if layer.skip is Skip.IDENTITY:
            og = og + G
            oh = oh + H
        elif layer.skip is Skip.OPLUS:
            m = min(og.shape[1], G.shape[1])
            og = og.copy()
            oh = oh.copy()
            og[:, :m] += G[:, :m]
            oh[:, :m] += H[:, :m]
        h, G, H = out, og, oh
    return h, G, H


def forward_jet(net: Network, x) -> Jet2:
    """Exact value, input gradient and input Hessian of the network at ``x``."""
    x = np.asarray(x, dtype=net.dtype).reshape(1, -1)
    v, g, H = forward_jet_batch(net, x)
    return Jet2(v[0], g[0], H[0])


# ---------------------------------------------------------------------------
# Laplacian jet: channels [value, d/dx_1, ..., d/dx_D, laplacian]

@dataclass
class _LapCache:
    J: np.ndarray  # input jet of the layer
    Z: np.ndarray  # pre-activation jet
    s: tuple  # (s0, s1, s2, s3, sign), see _kernels
    q: np.ndarray
    act_out: np.ndarray


def _act_derivs(act: Activation, z: np.ndarray) -> tuple:
    if act is Activation.SINE:
        s0, s1 = np.sin(z), np.cos(z)
        return s0, s1, s0, s1, -1.0
    s0, s1, s2, s3 = derivatives(act, z, 3)
    return s0, s1, s2, s3, 1.0


def input_lap_jet(X: np.ndarray) -> np.ndarray:
    B, D = X.shape
    J = np.zeros((D + 2, B, D), dtype=X.dtype)
    J[0] = X
    for k in range(D):
        J[1 + k, :, k] = 1
    return J


def lap_jet_forward(net: Network, X) -> tuple[np.ndarray, list[_LapCache]]:
    X = as_batch(net, X)
    act = net.activation
    J = input_lap_jet(X)
    C, B, _ = J.shape
    caches = []
    for layer in net.layers:
        n = layer.n
        Z = (J.reshape(C * B, -1) @ layer.W.T).reshape(C, B, n)
        Z[0] += layer.b
        sd = _act_derivs(act, Z[0])
        Aout, q = jet_act_forward(Z, *sd)
        if layer.A is not None:
            Hc = (Aout.reshape(C * B, n) @ layer.A.T).reshape(C, B, layer.d)
            Hc[0] += layer.c
        else:
            Hc = Aout
        if layer.skip is Skip.IDENTITY:
            Hc = Hc + J
        elif layer.skip is Skip.OPLUS:
            m = min(Hc.shape[-1], J.shape[-1])
            Hc = Hc.copy()
            Hc[..., :m] += J[..., :m]
        caches.append(_LapCache(J, Z, sd, q, Aout))
        J = Hc
    return J, caches


def lap_jet_backward(net: Network, caches: list[_LapCache], G: np.ndarray,
                     wanted: set[Key]) -> dict[Key, np.ndarray]:
    """Adjoint of :func:`lap_jet_forward` for the output-jet cotangent ``G``."""
    grads: dict[Key, np.ndarray] = {}
    C, B, _ = G.shape
    for i in range(len(net.layers) - 1, -1, -1):
        L, k = net.layers[i], caches[i]
        n = L.n
        need_inner = (i, "W") in wanted or (i, "b") in wanted
        if L.A is not None:
            G2 = G.reshape(C * B, -1)
            if (i, "A") in wanted:
                grads[(i, "A")] = G2.T @ k.act_out.reshape(C * B, n)
            if (i, "c") in wanted:
                grads[(i, "c")] = G[0].sum(axis=0)
            if i == 0 and not need_inner:
                break
            GZ = (G2 @ L.A).reshape(C, B, n)
        else:
            if i == 0 and not need_inner:
                break
            GZ = np.ascontiguousarray(G, dtype=G.dtype).copy()
        jet_act_backward(GZ, k.Z, *k.s, k.q)
        if (i, "W") in wanted:
            grads[(i, "W")] = GZ.reshape(C * B, n).T @ k.J.reshape(C * B, -1)
        if (i, "b") in wanted:
            grads[(i, "b")] = GZ[0].sum(axis=0)
        if i > 0:
            GJ = (GZ.reshape(C * B, n) @ L.W).reshape(C, B, -1)
            _skip_grad(L, GJ, G)
            G = GJ
    return grads


# ---------------------------------------------------------------------------
# residual loss for -lap(h * mask) = f

MaskFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


def _masked_laplacian(J: np.ndarray, X: np.ndarray, mask: MaskFn | None):
    """Laplacian of u = h * mask from the output jet of h (d_out must be 1)."""
    h, hg, hl = J[0, :, 0], J[1:-1, :, 0], J[-1, :, 0]
    if mask is None:
        one = np.ones_like(h)
        return h, hl, (one, np.zeros_like(hg), np.zeros_like(h))
    m, mg, ml = mask(X)
    m = m.astype(h.dtype)
    mg = np.asarray(mg, dtype=h.dtype).T  # (D, B)
    ml = ml.astype(h.dtype)
    lap = m * hl + 2 * np.einsum("kb,kb->b", hg, mg) + h * ml
    return h * m, lap, (m, mg, ml)


def _rhs_values(rhs, X: np.ndarray, dtype) -> np.ndarray:
    f = rhs(X.astype(np.float64)) if callable(rhs) else rhs
    return np.asarray(f, dtype=dtype).reshape(len(X))


def residual(net: Network, points, rhs, mask: MaskFn | None = None) -> np.ndarray:
    """R = -lap(u) - f with u = h * mask, evaluated exactly through the jet."""
    X = as_batch(net, points)
    if net.spec.d_out != 1:
        raise ValueError("residuals need a scalar network output")
    J, _ = lap_jet_forward(net, X)
    _, lap, _ = _masked_laplacian(J, X, mask)
    return -lap - _rhs_values(rhs, X, lap.dtype)


def backprop_residual(net: Network, points, rhs, mask: MaskFn | None = None,
                      mode: str = "S1", weight: float = 1.0) -> tuple[float, GradBag]:
    """``weight * mean(R^2)`` and its exact gradient w.r.t. trained tensors."""
    X = as_batch(net, points)
    if net.spec.d_out != 1:
        raise ValueError("residuals need a scalar network output")
    J, caches = lap_jet_forward(net, X)
    _, lap, (m, mg, ml) = _masked_laplacian(J, X, mask)
    R = -lap - _rhs_values(rhs, X, lap.dtype)
    sq = np.square(R, dtype=np.float64)
    loss = weight * float(np.mean(sq))
    if not np.isfinite(loss):
        bad = np.flatnonzero(~np.isfinite(sq))[0]
        raise NonFiniteError(f"non-finite residual at point {bad}")
    g = (-2.0 * weight / len(R)) * R  # d loss / d lap(u)
    G = np.zeros_like(J)
    G[0, :, 0] = g * ml
    G[1:-1, :, 0] = 2 * g * mg
    G[-1, :, 0] = g * m
    grads = lap_jet_backward(net, caches, G, _wanted(net, mode))
    return loss, GradBag(grads, mode.upper())


# ---------------------------------------------------------------------------
# finite-difference verification

@dataclass
class FdReport:
    max_rel_err: float
    worst: tuple[Key, tuple[int, ...]] | None
    n_checked: int
    n_skipped: int
    tolerance: float
    flagged: list[tuple[Key, tuple[int, ...], float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.max_rel_err <= self.tolerance


def _relu_pattern(net: Network, X: np.ndarray) -> np.ndarray:
    _, cache = _forward_cache(net, X)
    return np.concatenate([(z > 0).ravel() for _, z, _ in cache])


def fd_check(net: Network, loss_kind: str = "mse", tolerance: float = 1e-3, *,
             X, Y=None, rhs=None, mask: MaskFn | None = None, mode: str = "S2",
             step: float = 1e-3, grads: GradBag | dict | None = None,
             weight: float = 1.0) -> FdReport:
    """Compare analytic gradients with central differences in float64.

    ``rel = |g - fd| / max(|g|, |fd|, 1e-6 * max|fd| + 1e-12)``.  For ReLU
    networks a coordinate is skipped when a +/- step flips any activation
    pattern, since the loss is not differentiable across the kink.  Pass
    ``grads`` to audit an externally supplied gradient.
    """
    net64 = net.astype(np.float64)
    X = as_batch(net64, X)
    if loss_kind == "mse":
        def loss_of(n):
            return mse_loss(n, X, Y)
        if grads is None:
            _, grads = backprop_mse(net64, X, Y, mode)
    elif loss_kind == "residual":
        def loss_of(n):
            R = residual(n, X, rhs, mask)
            return weight * float(np.mean(R * R))
        if grads is None:
            _, grads = backprop_residual(net64, X, rhs, mask, mode, weight)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    relu = not net.activation.smooth
    base_pattern = _relu_pattern(net64, X) if relu else None
    tensors = dict(net64.tensors())
    keys = [k for k in net64.trainable_keys(mode) if k in grads]
    analytic, numeric, coords = [], [], []
    skipped = 0
    for key in keys:
        arr = tensors[key]
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + step
            lp = loss_of(net64)
            flip = relu and not np.array_equal(_relu_pattern(net64, X), base_pattern)
            arr[idx] = old - step
            lm = loss_of(net64)
            flip = flip or (relu and not np.array_equal(_relu_pattern(net64, X), base_pattern))
            arr[idx] = old
            if flip:
                skipped += 1
                continue
            analytic.append(float(np.asarray(grads[key])[idx]))
            numeric.append((lp - lm) / (2 * step))
            coords.append((key, idx))
    a = np.array(analytic)
    fd = np.array(numeric)
    if len(fd) == 0:
        return FdReport(0.0, None, 0, skipped, tolerance)
    floor = 1e-6 * np.abs(fd).max() + 1e-12
    rel = np.abs(a - fd) / np.maximum(np.maximum(np.abs(a), np.abs(fd)), floor)
    worst = int(np.argmax(rel))
    flagged = [(coords[j][0], coords[j][1], float(rel[j])) for j in np.flatnonzero(rel > tolerance)]
    return FdReport(float(rel[worst]), coords[worst], len(fd), skipped, tolerance, flagged)
