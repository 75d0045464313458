import numpy as np
import pytest

from mmnn.core import Rng, tune_allocator
from mmnn.nets import NetworkSpec, build_network

tune_allocator()


def small_net(kind="mmnn", d_in=2, d_out=1, width=8, rank=3, depth=3, act="relu",
              residual="identity", seed=0, dtype=np.float64, zero_bias=False):
    spec = NetworkSpec(kind, d_in, d_out, width, None if kind == "fcnn" else rank, depth,
                       act, residual, zero_bias)
    return build_network(spec, Rng(seed)).astype(dtype)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance lines are collected here and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
