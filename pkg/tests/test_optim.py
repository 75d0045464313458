import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import small_net
from mmnn.core import Rng
from mmnn.nets import NetworkSpec, NonFiniteError, build_network, save_network
from mmnn.optim import (AdamState, Constant, PdeWarmup, StepDecay, TrainConfig, adam_step, lr_at,
                        train)
from mmnn.targets import grid_1d


def test_step_decay_examples():
    s = StepDecay(0.001, 0.9, 400)
    assert lr_at(s, 399) == 0.001
    assert lr_at(s, 400) == pytest.approx(0.0009, rel=1e-15)


def test_pde_warmup_examples():
    s = PdeWarmup()
    assert lr_at(s, 100) == 0.0
    assert lr_at(s, 16000) == 0.001
    assert lr_at(s, 200) == 1 / 800
    assert lr_at(s, 17600) == pytest.approx(0.0009)
    with pytest.raises(ValueError):
        lr_at(s, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40000), st.integers(1, 40000))
def test_schedule_monotonicity(a, b):
    a, b = min(a, b), max(a, b)
    assert lr_at(StepDecay(0.001, 0.9, 400), a) >= lr_at(StepDecay(0.001, 0.9, 400), b)
    w = PdeWarmup()
    if b < 16000:
        assert 0 <= lr_at(w, a) <= lr_at(w, b)
    if a >= 16000:
        assert lr_at(w, a) >= lr_at(w, b) >= 0


def test_adam_hand_values():
    p = {"t": np.zeros(1)}
    st_ = AdamState.for_params(p)
    adam_step(p, {"t": np.ones(1)}, st_, 0.1)
    assert p["t"][0] == pytest.approx(-0.1 / (1 + 1e-8), rel=1e-12)
    t1 = p["t"][0]
    adam_step(p, {"t": np.ones(1)}, st_, 0.1)
    assert p["t"][0] < t1 < 0
    assert abs(p["t"][0] - t1) <= 0.1 * (1 + 10 * 1e-8)
    assert st_.t == 2 and np.all(st_.v["t"] >= 0)


def test_adam_zero_gradient_and_nonfinite():
    p = {"t": np.ones(3)}
    st_ = AdamState.for_params(p)
    adam_step(p, {"t": np.zeros(3)}, st_, 0.1)
    assert np.array_equal(p["t"], np.ones(3))
    with pytest.raises(NonFiniteError):
        adam_step(p, {"t": np.array([0, np.nan, 0])}, st_, 0.1)


def _const_data():
    return grid_1d(1000, target=lambda X: np.full(len(X), 0.5))


def test_learns_constant_target():
    net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 2), Rng(0))
    hist = train(net, _const_data(), TrainConfig(500, 100, Constant(1e-3)))
    assert hist.rows[-1].test_mse <= 1e-6
    assert hist.trained_params == 4 * 16 + 4 + 16 + 1


def test_zero_epochs_leaves_net(tmp_path):
    net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 2), Rng(0))
    save_network(net, tmp_path / "a")
    hist = train(net, _const_data(), TrainConfig(0, 100, Constant(1e-3)))
    save_network(net, tmp_path / "b")
    assert len(hist) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_s1_keeps_inner_weights_and_is_deterministic():
    data = grid_1d(200, target="Arctan")
    runs = []
    for _ in range(2):
        net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 3), Rng(3))
        W0 = [L.W.copy() for L in net.layers]
        hist = train(net, data, TrainConfig(5, 32, StepDecay(1e-3, 0.9, 2), seed=9))
        assert all(np.array_equal(a, L.W) for a, L in zip(W0, net.layers))
        runs.append([r.as_tuple()[:5] for r in hist.rows])
    assert runs[0] == runs[1]
    assert [r[0] for r in runs[0]] == [1, 2, 3, 4, 5]


def test_s2_count_and_batch_check():
    net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 2), Rng(0))
    hist = train(net, _const_data(), TrainConfig(1, 100, Constant(1e-3), mode="S2"))
    assert hist.trained_params == 2 * 16 + 4 * 16 + 4 + 16 * 4 + 16 + 16 + 1
    with pytest.raises(ValueError):
        train(net, grid_1d(10), TrainConfig(1, 100, Constant(1e-3)))


def test_divergence_aborts_with_partial_history():
    net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 2), Rng(0))
    data = grid_1d(100, target=lambda X: 1e4 * np.sin(40 * X[:, 0]))
    hist = train(net, data, TrainConfig(50, 10, Constant(10.0)))
    assert hist.status == "diverged"
    assert len(hist) < 50


def test_snapshots_saved():
    net = build_network(NetworkSpec("mmnn", 1, 1, 16, 4, 2), Rng(0))
    data = grid_1d(100, target="F1")
    hist = train(net, data, TrainConfig(3, 10, Constant(1e-3), snapshot_epochs=(1, 3)))
    assert sorted(hist.snapshots) == [1, 3]
    assert hist.snapshots[3].shape == (100, 1)
