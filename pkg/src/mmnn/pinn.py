"""Hard-constraint PINN for -lap(u) = f on (-1, 1)^2 with u = 0 on the boundary.

The network output is multiplied by m(x, y) = cos(pi x / 2) cos(pi y / 2), so
the boundary condition holds for every parameter value and the loss is the
mean squared PDE residual alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .activations import UnsupportedActivation
from .grad import MaskFn, backprop_residual, residual
from .metrics import max_err, mse
from .nets import Network, as_batch, forward_chunked
from .optim import PdeWarmup, TrainConfig, TrainingHistory, train
from .targets import Dataset, TargetFn, grid_2d

LAMBDA_PDE = 1e-3


def cos_mask(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mask value, gradient (B, 2) and Laplacian, evaluated in 64-bit."""
    X = np.asarray(X, dtype=np.float64)
    hx, hy = 0.5 * np.pi * X[:, 0], 0.5 * np.pi * X[:, 1]
    cx, cy, sx, sy = np.cos(hx), np.cos(hy), np.sin(hx), np.sin(hy)
    m = cx * cy
    grad = np.stack([-0.5 * np.pi * sx * cy, -0.5 * np.pi * cx * sy], axis=1)
    return m, grad, -0.5 * np.pi ** 2 * m


@dataclass(frozen=True)
class PdeProblem:
    rhs: TargetFn = field(default_factory=lambda: TargetFn("PoissonRhs2D"))
    exact: TargetFn = field(default_factory=lambda: TargetFn("PoissonExact2D"))
    lam: float = LAMBDA_PDE
    mask: MaskFn = cos_mask
    train_per_axis: int = 100
    eval_per_axis: int = 201

    def train_data(self) -> Dataset:
        return grid_2d(self.train_per_axis, target=self.rhs)

    def eval_grid(self) -> Dataset:
        return grid_2d(self.eval_per_axis, target=self.exact)


def _check_net(net: Network) -> None:
    if net.spec.d_in != 2 or net.spec.d_out != 1:
        raise ValueError(f"the Poisson problem needs a 2 -> 1 network, got "
                         f"{net.spec.d_in} -> {net.spec.d_out}")


def constrained_eval(net: Network, x, y=None, mask: MaskFn = cos_mask) -> np.ndarray:
    """u = h * m at points ``(x, y)`` or at a batch ``x`` of shape (N, 2)."""
    _check_net(net)
    if y is not None:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        X = np.stack([x.ravel(), y.ravel()], axis=1)
    else:
        X = as_batch(net, x)
    h = forward_chunked(net, X.astype(net.dtype))[:, 0]
    return (h * mask(X)[0]).astype(net.dtype)


def pde_residual(net: Network, points, problem: PdeProblem | None = None) -> np.ndarray:
    problem = problem or PdeProblem()
    _check_net(net)
    if not net.activation.smooth:
        raise UnsupportedActivation("PDE residuals need a twice differentiable activation")
    return residual(net, points, problem.rhs, problem.mask)


def evaluate_solution(net: Network, problem: PdeProblem | None = None,
                      grid: Dataset | None = None) -> tuple[float, float]:
    problem = problem or PdeProblem()
    grid = grid if grid is not None else problem.eval_grid()
    u = constrained_eval(net, grid.inputs, mask=problem.mask)
    return mse(u, grid.outputs), max_err(u, grid.outputs)


def pde_train_config(epochs: int, seed: int = 0, mode: str = "S1", batch_size: int = 2000,
                     **kw) -> TrainConfig:
    return TrainConfig(epochs=epochs, batch_size=batch_size, schedule=PdeWarmup(),
                       mode=mode, seed=seed, **kw)


def train_pde(net: Network, problem: PdeProblem | None, cfg: TrainConfig,
              data: Dataset | None = None, **kw) -> TrainingHistory:
    """Minimise ``lam * mean(R^2)`` over the collocation grid.

    The recorded ``train_mse`` is that weighted residual loss; test metrics
    compare ``u`` with the exact solution on ``cfg.test_grid`` (the 201^2
    evaluation grid when unset).
    """
    problem = problem or PdeProblem()
    _check_net(net)
    if not net.activation.smooth:
        raise UnsupportedActivation("PDE training needs a twice differentiable activation")
    data = data if data is not None else problem.train_data()
    if cfg.test_grid is None:
        cfg = replace(cfg, test_grid=problem.eval_grid())

    def batch_loss(n, Xb, Yb, mode):
        return backprop_residual(n, Xb, Yb, problem.mask, mode, problem.lam)

    def predict(n, X):
        return constrained_eval(n, X, mask=problem.mask)

    return train(net, data, cfg, batch_loss=batch_loss, predict=predict, **kw)
