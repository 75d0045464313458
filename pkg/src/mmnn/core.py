"""Dense arithmetic, seeded randomness and the fan-in uniform initializer.

Matrices are plain row-major numpy arrays.  Parameters live in float32; a
float64 "check mode" is obtained by casting a network with
:meth:`mmnn.nets.Network.astype` and is only used by verification code.
"""

from __future__ import annotations

import ctypes
import zlib

import numpy as np

DTYPE = np.float32
CHECK_DTYPE = np.float64

# numpy's PCG64 behind a SeedSequence; pinned, do not swap silently.
BIT_GENERATOR = "PCG64"


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class Rng:
    """Seeded PCG64 stream with reproducible named sub-streams.

    ``Rng(seed).stream("init")`` always yields the same sequence for the same
    seed and name, independent of how much the parent has been consumed.
    """

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._key = _key
        ss = np.random.SeedSequence(entropy=self.seed & (2**64 - 1), spawn_key=_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def stream(self, name: str) -> "Rng":
        return Rng(self.seed, self._key + (zlib.crc32(name.encode()),))

    def random(self, shape) -> np.ndarray:
        return self._gen.random(shape)

    def uniform(self, lo: float, hi: float, shape) -> np.ndarray:
        return self._gen.uniform(lo, hi, shape)

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, lo: int, hi: int, shape=None):
        return self._gen.integers(lo, hi, shape)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, key={self._key})"


def _check_matrix(name: str, M: np.ndarray) -> None:
    if M.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {M.shape}")


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``W @ x + b`` in the dtype of ``W``."""
    W = np.asarray(W)
    x = np.asarray(x, dtype=W.dtype)
    b = np.asarray(b, dtype=W.dtype)
    _check_matrix("W", W)
    if x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ShapeError(f"affine: W has shape {W.shape} but x has shape {x.shape}")
    if b.shape != (W.shape[0],):
        raise ShapeError(f"affine: W has shape {W.shape} but b has shape {b.shape}")
    return W @ x + b


def matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    _check_matrix("A", A)
    _check_matrix("B", B)
    if A.shape[1] != B.shape[0]:
        raise ShapeError(f"matmul: A has shape {A.shape} but B has shape {B.shape}")
    return A @ B


def init_uniform_fan_in(rng: Rng, rows: int, cols: int | None, fan_in: int,
                        dtype=DTYPE) -> np.ndarray:
    """Draw i.i.d. entries from U(-sqrt(1/fan_in), sqrt(1/fan_in)).

    ``cols=None`` returns a vector of length ``rows`` (used for biases).
    The open interval is respected after the cast to ``dtype``.
    """
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    bound = np.sqrt(1.0 / fan_in)
    shape = (rows,) if cols is None else (rows, cols)
    out = (bound * (2.0 * rng.random(shape) - 1.0)).astype(dtype)
    # float32 rounding can land exactly on the bound
    edge = np.abs(out.astype(np.float64)) >= bound
    if edge.any():
        out[edge] = np.nextafter(out[edge], dtype(0))
    return out


def tune_allocator(threshold: int = 1 << 30) -> bool:
    """Keep large numpy buffers on the glibc heap instead of fresh mmaps.

    Training allocates the same multi-megabyte temporaries every step; with
    the default mmap threshold each one page-faults anew, which costs about a
    third of a Laplacian-jet step.  No-op (returns False) off glibc.
    """
    try:
        libc = ctypes.CDLL("libc.so.6")
    except OSError:
        return False
    ok = libc.mallopt(-3, threshold) == 1  # M_MMAP_THRESHOLD
    ok &= libc.mallopt(-1, threshold) == 1  # M_TRIM_THRESHOLD
    return bool(ok)
