import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmnn.activations import Activation, UnsupportedActivation, derivatives, dsigma, sigma

SMOOTH = [a for a in Activation if a.smooth]


@pytest.mark.parametrize("act", SMOOTH)
def test_derivative_chain_matches_finite_differences(act):
    z = np.linspace(-3, 3, 101)
    h = 1e-5
    d = derivatives(act, z, 3)
    for k in range(3):
        lo = derivatives(act, z - h, 3)[k]
        hi = derivatives(act, z + h, 3)[k]
        assert np.allclose((hi - lo) / (2 * h), d[k + 1], atol=1e-6, rtol=1e-6)
    assert np.allclose(dsigma(act, z), d[1])
    assert np.allclose(sigma(act, z), d[0])


def test_relu_refuses_higher_orders():
    with pytest.raises(UnsupportedActivation):
        derivatives(Activation.RELU, np.zeros(3), 2)
    assert dsigma(Activation.RELU, np.array([0.0]))[0] == 0.0


def test_parse_and_codes():
    assert Activation.parse("SINE") is Activation.SINE
    for a in Activation:
        assert Activation.from_code(a.code) is a
    with pytest.raises(ValueError, match="unknown activation"):
        Activation.parse("softplus")


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50))
def test_float32_is_preserved(z):
    arr = np.array([z], dtype=np.float32)
    for a in Activation:
        assert sigma(a, arr).dtype == np.float32
