import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmnn.decomp import (DomainError, Partition1D, Partition2D, export_components, psi, psi_layer,
                         reconstruct_1d, reconstruct_2d, two_component_demo)
from mmnn.nets import forward
from mmnn.targets import TargetFn, read_points_csv

runge = lambda x: 1 / (1000 * x ** 2 + 1)
mix = lambda x: np.cos(6 * np.pi * x) ** 2 + np.sin(10 * np.pi * x * x)


def test_psi_examples():
    p = Partition1D((-1, 0, 0.2, 1))
    assert psi(p, 2, -0.5) == -1
    assert psi(p, 2, 0.1) == pytest.approx(0, abs=1e-15)
    assert psi(p, 2, 0.7) == 1
    assert psi(p, 2, 0.0) == -1 and psi(p, 2, 0.2) == 1
    x = np.linspace(-2, 2, 1000)
    for i in (1, 2, 3):
        assert np.all(np.diff(psi(p, i, x)) >= 0)


@pytest.mark.parametrize("f,bps", [(runge, (-1, -0.2, 0, 0.2, 1)), (mix, (-1, -0.7, 0, 0.7, 1))])
def test_reconstruction_examples(f, bps):
    x = np.linspace(-1, 1, 10 ** 4)
    assert np.abs(reconstruct_1d(f, Partition1D(bps), x) - f(x)).max() <= 1e-12


def test_single_interval_and_domain():
    x = np.linspace(-1, 1, 101)
    assert np.abs(reconstruct_1d(mix, Partition1D((-1, 1)), x) - mix(x)).max() <= 1e-15
    with pytest.raises(DomainError):
        reconstruct_1d(mix, Partition1D((-1, 1)), 1.5)
    with pytest.raises(ValueError):
        Partition1D((0, 0, 1))


def _random_poly(rng, deg=5):
    c = rng.normal(size=deg + 1)
    return lambda x: np.polyval(c, x)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 6))
def test_reconstruction_random_partitions(seed, n):
    rng = np.random.default_rng(seed)
    inner = np.sort(rng.uniform(-1, 1, n - 1))
    bps = (-1.0, *inner, 1.0)
    if np.any(np.diff(bps) < 1e-3):
        return
    tg = [tuple(np.sort(rng.uniform(-3, 3, 2)) + (0, 0.5)) for _ in range(n)]
    f = _random_poly(rng)
    x = np.linspace(-1, 1, 10 ** 4)
    assert np.abs(reconstruct_1d(f, Partition1D(bps, tg), x) - f(x)).max() <= 1e-10


def test_two_component_identity():
    x = np.linspace(-1, 1, 2001)
    f = lambda t: np.cos(20 * np.pi * t)
    assert np.abs(two_component_demo(f, x) - f(x)).max() <= 1e-12
    g = _random_poly(np.random.default_rng(4), 3)
    assert np.abs(two_component_demo(g, x) - g(x)).max() <= 1e-12
    assert two_component_demo(g, 0.0) == g(0.0)


def test_psi_layer_realises_psi():
    p = Partition1D((-1, -0.2, 0, 0.2, 1))
    x = np.linspace(-1, 1, 1001)
    for i in range(1, 5):
        out = forward(psi_layer(p, i, np.float64), x[:, None])[:, 0]
        assert np.abs(out - psi(p, i, x)).max() <= 1e-12


def test_reconstruct_2d():
    g = np.linspace(-1, 1, 200)
    X, Y = np.meshgrid(g, g, indexing="ij")
    f2 = TargetFn("F2s", {"s": 2.0})
    f = lambda x, y: f2(np.column_stack([np.ravel(x), np.ravel(y)])).reshape(np.shape(x))
    p = Partition2D(Partition1D.uniform(3), Partition1D.uniform(3))
    assert np.abs(reconstruct_2d(f, p, X, Y) - f(X, Y)).max() <= 1e-10
    one = Partition2D(Partition1D((-1, 1)), Partition1D((-1, 1)))
    assert np.abs(reconstruct_2d(f, one, X, Y) - f(X, Y)).max() <= 1e-15
    with pytest.raises(DomainError):
        reconstruct_2d(f, p, 2.0, 0.0)


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_reconstruct_2d_random(seed):
    rng = np.random.default_rng(seed)
    gx, gy = _random_poly(rng, 2), _random_poly(rng, 2)
    f = lambda x, y: gx(x) * gy(y) + np.sin(3 * x * y)
    parts = [Partition1D((-1.0, *np.sort(rng.uniform(-0.9, 0.9, k)), 1.0)) for k in rng.integers(1, 4, 2)]
    g = np.linspace(-1, 1, 200)
    X, Y = np.meshgrid(g, g, indexing="ij")
    assert np.abs(reconstruct_2d(f, Partition2D(*parts), X, Y) - f(X, Y)).max() <= 1e-10


def test_export_components(tmp_path):
    p = Partition1D((-1, -0.2, 0, 0.2, 1))
    files = export_components(runge, p, np.linspace(-1, 1, 101), tmp_path)
    assert len(files) == 8
    X, v = read_points_csv(tmp_path / "psi_2.csv")
    assert np.array_equal(v.ravel(), psi(p, 2, X[:, 0]))
    assert len(export_components(runge, Partition1D((-1, 1)), np.linspace(-1, 1, 5), tmp_path / "b")) == 2
