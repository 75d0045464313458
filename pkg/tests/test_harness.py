import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmnn.cli import main
from mmnn.harness import registry
from mmnn.harness.baselines import (SingularSystem, bilinear_baseline_2d, hat_ls_1d, hat_ls_fit)
from mmnn.harness.config import ConfigError, ExperimentConfig
from mmnn.harness.io import read_history, read_table, write_history
from mmnn.harness.pde import parse_net_spec, parse_seeds
from mmnn.harness.report import report
from mmnn.harness.runner import multi_seed, run_experiment
from mmnn.metrics import MetricRow, last100_avg, max_err, mse, smoothed_curve
from mmnn.metrics import test_error_aver as error_aver
from mmnn.nets import count_spec_params
from mmnn.targets import TargetFn, grid_2d

SMALL = """\
[target]
id = Arctan

[network]
width = 16
rank = 4
depth = 3

[train]
epochs = 3
batch_size = 50
schedule = constant

[data]
train_n = 100
test_n = 50

[output]
name = small
snapshot_epochs = 1,3
"""


# -- metrics ------------------------------------------------------------------

def test_metric_examples():
    t = np.linspace(0, 1, 10)
    assert mse(t, t) == 0 and max_err(t, t) == 0
    assert mse(np.zeros(7), np.ones(7)) == 1 and max_err(np.zeros(7), np.ones(7)) == 1
    alt = 0.1 * (-1) ** np.arange(10)
    assert mse(t + alt, t) == pytest.approx(0.01) and max_err(t + alt, t) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        mse([], [])


def test_error_aver_examples():
    assert error_aver([2.0] * 30, 17) == 2.0
    e = np.arange(1, 51, dtype=float)
    assert error_aver(e, 1) == e.mean()
    assert error_aver([3.5], 1) == 3.5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=400))
def test_smoothed_curve_matches_window_definition(errs):
    sm = smoothed_curve(errs)
    for k in {1, len(errs), (len(errs) + 1) // 2}:
        lo, hi = max(1, k - 100), min(k + 100, len(errs))
        assert sm[k - 1] == pytest.approx(np.mean(errs[lo - 1:hi]), rel=1e-9, abs=1e-9)


def test_last100():
    rows = [MetricRow(k, 0.1, 0, 1.0, 2.0) for k in range(1, 101)] + [MetricRow(101, 0.1, 0, 102.0, 2.0)]
    assert last100_avg(rows)[0] == pytest.approx((99 + 102) / 100)
    assert last100_avg(rows[:50]) == (1.0, 2.0)


# -- baselines ----------------------------------------------------------------

def test_hat_ls_linear_and_interpolation():
    x = np.linspace(-1, 1, 300)
    m, _ = hat_ls_1d(lambda t: 3 * t - 1, 7, x, np.linspace(-1, 1, 999))
    assert m <= 1e-20
    f = TargetFn("CosSinMix")
    nodes, coef = hat_ls_fit(f, 40, np.linspace(-1, 1, 40))
    assert np.abs(coef - f(nodes)).max() <= 1e-10
    with pytest.raises(SingularSystem):
        hat_ls_fit(f, 40, np.linspace(-1, -0.5, 100))


def test_hat_ls_local_sine_oracle():
    # computed value 0.391; the burst is narrower than the hat spacing
    m, mx = hat_ls_1d(TargetFn("LocalSine"), 153, np.linspace(-1, 1, 1000), np.linspace(-1, 1, 2000))
    assert 0.35 <= mx <= 0.45 and m > 1e-4


def test_bilinear_baselines():
    f = lambda X: 1 + 2 * X[:, 0] - X[:, 1] + 0.5 * X[:, 0] * X[:, 1]
    P = np.random.default_rng(0).uniform(-1, 1, (500, 2))
    assert bilinear_baseline_2d(f, 5, P)[1] <= 1e-12
    nodes = grid_2d(9).inputs
    g = TargetFn("PolarBlob2D")
    assert bilinear_baseline_2d(g, 9, nodes)[1] <= 1e-12
    m, mx = bilinear_baseline_2d(TargetFn("PolarSpikes2D"), 72, grid_2d(400).inputs)
    assert 0.2 <= mx <= 0.45 and 1e-4 <= m <= 4e-4


# -- config and registry ------------------------------------------------------

def test_config_round_trip_and_errors(tmp_path):
    cfg = ExperimentConfig.from_text(SMALL)
    text = cfg.to_text()
    assert ExperimentConfig.from_text(text).to_text() == text
    with pytest.raises(ConfigError, match="unknown key"):
        ExperimentConfig.from_text(SMALL.replace("width = 16", "width = 16\nwdith = 3"))
    with pytest.raises(ConfigError, match="unknown section"):
        ExperimentConfig.from_text(SMALL + "\n[extra]\na = 1\n")
    with pytest.raises(ConfigError, match="missing"):
        ExperimentConfig.from_text(SMALL.replace("depth = 3\n", ""))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(SMALL.replace("rank = 4", "rank = 40"))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(SMALL.replace("id = Arctan", "id = Nope"))


GOLDEN = {
    "table1-mmnn1-s1": ("Osc1D_cos36", (400, 20, 6), 1000, 100, 20000, (0.001, 0.9, 400), "S1"),
    "table1-mmnn2-s2": ("Osc1D_cos36", (590, 28, 6), 1000, 100, 20000, (0.001, 0.9, 400), "S2"),
    "table2-f1-mmnn-s1": ("F1", (388, 18, 6), 1000, 100, 20000, (0.001, 0.9, 400), "S1"),
    "table2-f1-fcnn-83": ("F1", (83, None, 6), 1000, 100, 20000, (0.001, 0.9, 400), "S1"),
    "fig5-f2-mmnn2-s1": ("F2s", (789, 36, 12), 600, 1000, 800, (0.001, 0.9, 16), "S1"),
    "fig5-f2-fcnn-240": ("F2s", (240, None, 12), 600, 1000, 800, (0.001, 0.9, 16), "S1"),
    "polar-spikes": ("PolarSpikes2D", (100, 10, 6), 400, 1000, 1000, (0.001, 0.9, 25), "S1"),
}

COUNTS = {"table1-mmnn1-s1": (40501, 83301), "table1-mmnn2-s2": (83331, 170061),
          "table2-f1-mmnn-s1": (35399, 73035), "table2-f1-fcnn-83": (35110, 35110),
          "table2-f1-fcnn-120": (72961, 72961), "fig5-f2-mmnn2-s1": (313630, 637120),
          "fig5-f2-fcnn-168": (312985, 312985), "fig5-f2-fcnn-240": (637201, 637201),
          "polar-spikes": (5151, 10951), "arctan": (153, 345)}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_registry_golden(name):
    cfg = registry.get(name)
    tid, (w, r, l), n, batch, epochs, sched, mode = GOLDEN[name]
    spec = cfg.net_spec()
    assert (cfg.target.id, spec.width, spec.rank, spec.depth) == (tid, w, r, l)
    assert (cfg.data.train_n, cfg.train.batch_size, cfg.train.epochs) == (n, batch, epochs)
    assert (cfg.train.lr, cfg.train.gamma, cfg.train.step_len, cfg.train.mode) == (*sched, mode)


@pytest.mark.parametrize("name", sorted(COUNTS))
def test_registry_param_counts(name):
    assert count_spec_params(registry.get(name).net_spec()) == COUNTS[name]


def test_registry_unknown():
    with pytest.raises(KeyError):
        registry.get("nope")


# -- runner, report, multi-seed -------------------------------------------------

def test_run_experiment_artifacts_and_determinism(tmp_path):
    cfg = ExperimentConfig.from_text(SMALL)
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    for f in ("history.csv", "checkpoint.bin", "pred_epoch1.csv", "pred_epoch3.csv", "summary.csv",
              "config.echo", "timing.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() or f == "timing.csv"
    assert len(read_history(tmp_path / "a" / "history.csv")) == 3
    header, rows = read_table(tmp_path / "a" / "summary.csv")
    s = dict(zip(header, rows[0]))
    assert (int(s["trained_params"]), int(s["total_params"])) == (153, 345)
    assert a.ok and b.summary == a.summary


def test_history_round_trip(tmp_path):
    rows = [MetricRow(k, 0.1 * k, 1 / 3, 2e-7 * k, np.pi, 0) for k in range(1, 6)]
    write_history(tmp_path / "h.csv", rows)
    assert read_history(tmp_path / "h.csv") == rows


def test_report(tmp_path):
    run_experiment(ExperimentConfig.from_text(SMALL), tmp_path)
    text = report(tmp_path)
    assert "last-100" in text
    header, rows = read_table(tmp_path / "curves.csv")
    assert len(rows) == 3 and header[0] == "epoch"
    _, diff = read_table(tmp_path / "diff_epoch3.csv")
    assert len(diff) == 50
    with pytest.raises(FileNotFoundError):
        report(tmp_path / "missing")


def test_report_exact_snapshot_and_log(tmp_path):
    write_history(tmp_path / "history.csv", [MetricRow(1, 0.1, 1e-4, 1e-4, 1e-2)])
    (tmp_path / "pred_epoch1.csv").write_text("x1,pred,truth\n0.5,2.0,2.0\n-0.5,1.0,1.0\n")
    report(tmp_path)
    _, rows = read_table(tmp_path / "curves.csv")
    assert len(rows) == 1 and float(rows[0][5]) == pytest.approx(-4)
    _, diff = read_table(tmp_path / "diff_epoch1.csv")
    assert all(float(r[-1]) == 0 for r in diff)


def test_multi_seed(tmp_path):
    cfg = ExperimentConfig.from_text(SMALL)
    rows = multi_seed(cfg, [3, 1, 1], tmp_path)
    assert [r["seed"] for r in rows] == [1, 1, 3]
    assert rows[0] == rows[1]
    assert multi_seed(cfg, [], tmp_path / "empty") == []
    header, body = read_table(tmp_path / "empty" / "table.csv")
    assert header == ["seed", "mse", "max", "status"] and body == []


def test_pde_parsing():
    s = parse_net_spec("301x16x6")
    assert count_spec_params(s) == (24462, 50950)
    assert count_spec_params(parse_net_spec("100x--x6")) == (50901, 50901)
    assert parse_seeds("0..3") == [0, 1, 2, 3] and parse_seeds("5,2") == [5, 2]


# -- CLI ----------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text(SMALL)
    assert main(["train", "--config", str(cfgp), "--out", str(tmp_path / "r")]) == 0
    assert main(["report", str(tmp_path / "r")]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text(SMALL.replace("width = 16", "width = 16\nbogus = 1"))
    assert main(["train", "--config", str(bad)]) == 2
    assert main(["train", "--config", str(tmp_path / "none.ini")]) == 4
    assert main(["report", str(tmp_path / "nothing")]) == 4
    div = tmp_path / "div.ini"
    div.write_text(SMALL.replace("schedule = constant", "schedule = constant\nlr = 1000.0")
                   .replace("epochs = 3", "epochs = 40"))
    assert main(["train", "--config", str(div), "--out", str(tmp_path / "d")]) in (0, 3)
    assert main(["registry", "list"]) == 0
    assert main(["registry", "run", "nope"]) == 2
    assert main(["decompose", "--target", "Runge1000", "--breakpoints=-1,-0.2,0,0.2,1",
                 "--out", str(tmp_path / "dec")]) == 0
    assert len(list((tmp_path / "dec").glob("*.csv"))) == 8
    assert main(["decompose", "--target", "F2s", "--breakpoints=-1,1"]) == 2
    assert main(["pde", "--spec", "bad", "--epochs", "1"]) == 2
