"""Activation functions with analytic first, second and third derivatives."""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import erf


class UnsupportedActivation(ValueError):
    """The activation lacks the derivative order a computation needs."""


class Activation(str, Enum):
    RELU = "relu"
    SINE = "sine"
    GELU = "gelu"
    SWISH = "swish"
    TANH = "tanh"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, value: "str | Activation") -> "Activation":
        if isinstance(value, Activation):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown activation {value!r}; expected one of "
                             f"{[a.value for a in cls]}") from None

    @property
    def smooth(self) -> bool:
        return self is not Activation.RELU

    @property
    def code(self) -> int:
        return list(Activation).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Activation":
        return list(Activation)[code]


_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _sig(z):
    # numerically safe logistic, dtype preserving
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _phi(z):
    return (_INV_SQRT_2PI * np.exp(-0.5 * z * z)).astype(z.dtype, copy=False)


def _Phi(z):
    return (0.5 * (1.0 + erf(z / np.sqrt(2.0)))).astype(z.dtype, copy=False)


def sigma(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(z, 0)
    if kind is Activation.SINE:
        return np.sin(z)
    if kind is Activation.GELU:
        return z * _Phi(z)
    if kind is Activation.SWISH:
        return z * _sig(z)
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.SIGMOID:
        return _sig(z)
    raise ValueError(kind)


def dsigma(kind: Activation, z: np.ndarray) -> np.ndarray:
    """First derivative; ReLU'(0) is taken as 0."""
    if kind is Activation.RELU:
        return (z > 0).astype(z.dtype)
    if kind is Activation.SINE:
        return np.cos(z)
    if kind is Activation.GELU:
        return _Phi(z) + z * _phi(z)
    if kind is Activation.SWISH:
        s = _sig(z)
        return s + z * s * (1 - s)
    if kind is Activation.TANH:
        t = np.tanh(z)
        return 1 - t * t
    if kind is Activation.SIGMOID:
        s = _sig(z)
        return s * (1 - s)
    raise ValueError(kind)


def derivatives(kind: Activation, z: np.ndarray, order: int) -> list[np.ndarray]:
    """Return ``[sigma, sigma', ..., sigma^(order)]`` evaluated at ``z``.

    Orders above one are refused for ReLU.
    """
    if order > 1 and kind is Activation.RELU:
        raise UnsupportedActivation(
            "ReLU has no second derivative; use sine, tanh, gelu, swish or sigmoid")
    if kind is Activation.SINE:
        s, c = np.sin(z), np.cos(z)
        return [s, c, -s, -c][: order + 1]
    if kind is Activation.TANH:
        t = np.tanh(z)
        d1 = 1 - t * t
        d2 = -2 * t * d1
        d3 = -2 * d1 * d1 + 4 * t * t * d1
        return [t, d1, d2, d3][: order + 1]
    if kind is Activation.SIGMOID:
        s = _sig(z)
        d1 = s * (1 - s)
        d2 = d1 * (1 - 2 * s)
        d3 = d2 * (1 - 2 * s) - 2 * d1 * d1
        return [s, d1, d2, d3][: order + 1]
    if kind is Activation.SWISH:
        s = _sig(z)
        s1 = s * (1 - s)
        s2 = s1 * (1 - 2 * s)
        s3 = s2 * (1 - 2 * s) - 2 * s1 * s1
        return [z * s, s + z * s1, 2 * s1 + z * s2, 3 * s2 + z * s3][: order + 1]
    if kind is Activation.GELU:
        P, p = _Phi(z), _phi(z)
        zz = z * z
        return [z * P, P + z * p, p * (2 - zz), z * p * (zz - 4)][: order + 1]
    if kind is Activation.RELU:
        return [sigma(kind, z), dsigma(kind, z)][: order + 1]
    raise ValueError(kind)
