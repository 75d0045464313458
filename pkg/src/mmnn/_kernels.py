"""Elementwise parts of the Laplacian jet, written to reuse buffers.

Shapes: ``Z`` and ``out`` are ``(C, B, n)`` with ``C = D + 2`` channels
(value, D gradient channels, Laplacian).  ``s0 .. s3`` are the activation
and its first three derivatives at ``Z[0]``; ``sign`` scales s2/s3 so the
sine case can pass ``(s0, s1)`` again with ``sign = -1``.
"""

from __future__ import annotations

import numpy as np


def _np_forward(Z, s0, s1, s2, s3, sign, out, q):
    zg, zl = Z[1:-1], Z[-1]
    np.einsum("kbn,kbn->bn", zg, zg, out=q)
    out[0] = s0
    np.multiply(zg, s1, out=out[1:-1])
    np.multiply(s1, zl, out=out[-1])
    t = s2 * q
    if sign < 0:
        out[-1] -= t
    else:
        out[-1] += t


def _np_backward(G, Z, s0, s1, s2, s3, sign, q):
    zg, zl = Z[1:-1], Z[-1]
    g0, gg, gl = G[0], G[1:-1], G[-1]
    e = gl * zl
    e += np.einsum("kbn,kbn->bn", gg, zg)
    e *= s2
    g0 *= s1
    f = gl * s3
    f *= q
    e += f
    if sign < 0:
        g0 -= e
    else:
        g0 += e
    t = gl * s2
    t *= 2 * sign
    gg *= s1
    gg += t * zg
    gl *= s1


def jet_act_forward(Z, s0, s1, s2, s3, sign):
    """Activation jet and the cached gradient norm ``q = sum_k zg_k^2``."""
    out = np.empty_like(Z)
    q = np.empty_like(Z[0])
    _np_forward(Z, s0, s1, s2, s3, sign, out, q)
    return out, q


def jet_act_backward(G, Z, s0, s1, s2, s3, sign, q):
    """Turn the cotangent of the activation jet into that of ``Z``, in place."""
    _np_backward(G, Z, s0, s1, s2, s3, sign, q)
    return G
