import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from quboround.io_formats import load_dataset, load_model
from quboround.model import (
    DenseLayer,
    DenseNetwork,
    DimensionError,
    Sample,
    forward,
    per_layer_calibration_inputs,
    predict,
)

from util import GOLDEN_FORWARD, MNIST1_DATA, MNIST1_MODEL


def single_layer(w, b, act="none"):
    return DenseNetwork(layers=(DenseLayer(weights=w, bias=b, activation=act),))


def test_identity_layer_passes_input_through():
    net = single_layer(np.eye(2), np.zeros(2))
    (pre, post), = forward(net, np.array([3.0, 4.0]))
    assert np.array_equal(pre, [3.0, 4.0])
    assert np.array_equal(post, [3.0, 4.0])


def test_relu_clamps_negative_preactivation():
    net = single_layer(np.array([[1.0, 1.0]]), np.array([-1.0]), "relu")
    (pre, post), = forward(net, np.array([0.2, 0.3]))
    assert pre[0] == pytest.approx(-0.5)
    assert post[0] == 0.0


def test_dimension_mismatch_names_layer():
    net = single_layer(np.eye(3), np.zeros(3))
    with pytest.raises(DimensionError, match="layer 0.*3"):
        forward(net, np.zeros(2))


def test_layer_validation():
    with pytest.raises(DimensionError):
        DenseLayer(weights=np.eye(2), bias=np.zeros(3))
    with pytest.raises(ValueError):
        DenseLayer(weights=np.array([[np.inf]]), bias=np.zeros(1))
    with pytest.raises(DimensionError):
        DenseNetwork(
            layers=(
                DenseLayer(weights=np.ones((2, 3)), bias=np.zeros(2)),
                DenseLayer(weights=np.ones((2, 4)), bias=np.zeros(2)),
            )
        )
    with pytest.raises(ValueError):
        DenseNetwork(layers=())


def test_predict_argmax_and_ties():
    net = single_layer(np.eye(2), np.zeros(2))
    assert predict(net, np.array([0.1, 0.9])) == 1
    assert predict(net, np.array([0.5, 0.5])) == 0


@given(arrays(np.float64, 3, elements=st.floats(-1e6, 1e6)))
def test_identity_network_forward_is_identity(x):
    net = single_layer(np.eye(3), np.zeros(3))
    (_, post), = forward(net, x)
    assert np.array_equal(post, x)


@given(arrays(np.float64, 4, elements=st.floats(-50, 50)))
def test_activation_ranges(x):
    relu_net = single_layer(np.eye(4), np.zeros(4), "relu")
    soft_net = single_layer(np.eye(4), np.zeros(4), "softmax")
    (_, relu_out), = forward(relu_net, x)
    (_, soft_out), = forward(soft_net, x)
    assert np.all(relu_out >= 0)
    assert soft_out.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all((soft_out >= 0) & (soft_out <= 1))


@given(
    arrays(np.float64, 4, elements=st.floats(-50, 50)),
    st.floats(-100, 100),
)
def test_softmax_predict_shift_invariant(x, shift):
    w = np.vstack([np.eye(4), np.ones((1, 4))])
    net = single_layer(w, np.zeros(5), "softmax")
    shifted = single_layer(w, np.full(5, shift), "softmax")
    assert predict(net, x) == predict(shifted, x)


class TestGoldenFixture:
    """Forward pass against the committed scalar-loop golden outputs."""

    @pytest.fixture
    def golden(self):
        with open(GOLDEN_FORWARD, "r", encoding="utf-8") as fh:
            return json.load(fh)

    @pytest.fixture
    def net_and_samples(self):
        return load_model(MNIST1_MODEL), load_dataset(MNIST1_DATA)

    def test_per_layer_outputs_match(self, golden, net_and_samples):
        net, samples = net_and_samples
        for entry in golden["samples"]:
            (pre, post), = forward(net, samples[entry["index"]].features)
            assert np.allclose(pre, entry["pre"], atol=1e-6)
            assert np.allclose(post, entry["post"], atol=1e-6)

    def test_predict_matches_golden(self, golden, net_and_samples):
        net, samples = net_and_samples
        for entry in golden["samples"]:
            assert predict(net, samples[entry["index"]].features) == entry["predicted"]


def test_calibration_inputs_layer0_raw_then_float_activations():
    rng = np.random.default_rng(1)
    net = DenseNetwork(
        layers=(
            DenseLayer(weights=rng.normal(size=(3, 2)), bias=rng.normal(size=3), activation="relu"),
            DenseLayer(weights=rng.normal(size=(2, 3)), bias=rng.normal(size=2), activation="none"),
        )
    )
    samples = [Sample(features=rng.normal(size=2), label=0) for _ in range(4)]
    inputs = per_layer_calibration_inputs(net, samples)
    assert np.array_equal(inputs[0], np.stack([s.features for s in samples]))
    expected = np.stack([forward(net, s.features)[0][1] for s in samples])
    assert np.allclose(inputs[1], expected)


def test_calibration_inputs_empty_rejected():
    net = single_layer(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        per_layer_calibration_inputs(net, [])
