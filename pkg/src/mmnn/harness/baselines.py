"""Classical baselines: 1D hat-function least squares and 2D bilinear interpolation."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..metrics import max_err, mse


class SingularSystem(np.linalg.LinAlgError):
    pass


def hat_design(x, nodes) -> np.ndarray:
    """Values of the nodal hat functions (free end hats included) at ``x``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = len(nodes)
    eye = np.eye(n)
    return np.stack([np.interp(x, nodes, eye[k]) for k in range(n)], axis=1)


def hat_ls_fit(f, n_basis: int, sample_x, lo: float = -1.0, hi: float = 1.0):
    """Nodes and coefficients of the least-squares fit of ``f`` by hats."""
    if n_basis < 2:
        raise ValueError("need at least two hat functions")
    nodes = np.linspace(lo, hi, n_basis)
    x = np.asarray(sample_x, dtype=np.float64).ravel()
    P = hat_design(x, nodes)
    M = P.T @ P
    rhs = P.T @ np.asarray(f(x), dtype=np.float64).ravel()
    if np.linalg.matrix_rank(M) < n_basis:
        raise SingularSystem("normal matrix is singular; the sample grid misses some hat supports")
    return nodes, np.linalg.solve(M, rhs)


def hat_ls_1d(f, n_basis: int, sample_grid, eval_grid, lo: float = -1.0,
              hi: float = 1.0) -> tuple[float, float]:
    nodes, coef = hat_ls_fit(f, n_basis, sample_grid, lo, hi)
    xe = np.asarray(eval_grid, dtype=np.float64).ravel()
    return mse(np.interp(xe, nodes, coef), f(xe)), max_err(np.interp(xe, nodes, coef), f(xe))


def bilinear_interpolant(f, n_per_axis: int, lo: float = -1.0, hi: float = 1.0):
    """Piecewise bilinear interpolant of ``f`` (taking (N, 2) points) on a uniform grid."""
    if n_per_axis < 2:
        raise ValueError("need at least two nodes per axis")
    ax = np.linspace(lo, hi, n_per_axis)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    vals = np.asarray(f(np.column_stack([X.ravel(), Y.ravel()])), dtype=np.float64)
    return RegularGridInterpolator((ax, ax), vals.reshape(n_per_axis, n_per_axis), method="linear")


def bilinear_baseline_2d(f, n_per_axis: int, eval_grid, lo: float = -1.0,
                         hi: float = 1.0) -> tuple[float, float]:
    interp = bilinear_interpolant(f, n_per_axis, lo, hi)
    P = np.asarray(eval_grid, dtype=np.float64)
    pred = interp(P)
    truth = f(P)
    return mse(pred, truth), max_err(pred, truth)
