"""Dense network representation and the float forward pass.

Layers are immutable after construction; all math runs in float64 even if
model files were produced in float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "softmax", "none")


class DimensionError(ValueError):
    """Shape mismatch between a layer and its input or neighbours."""


def apply_activation(y, activation: str):
    if activation == "relu":
        return np.maximum(y, 0.0)
    if activation == "softmax":
        # max-subtraction for numerical stability
        shifted = y - np.max(y, axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)
    if activation == "none":
        return np.asarray(y, dtype=np.float64)
    raise ValueError(f"unknown activation {activation!r}")


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # (n, f): output neurons x input features
    bias: np.ndarray  # (n,)
    activation: str = "none"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionError(f"weights must be 2-D, got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise DimensionError(
                f"bias length {b.shape} does not match weight rows {w.shape[0]}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        w.setflags(write=False)
        b.setflags(write=False)

    @property
    def out_features(self) -> int:
        return self.weights.shape[0]

    @property
    def in_features(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class DenseNetwork:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for idx in range(1, len(layers)):
            prev, cur = layers[idx - 1], layers[idx]
            if cur.in_features != prev.out_features:
                raise DimensionError(
                    f"layer {idx} expects {cur.in_features} inputs but layer "
                    f"{idx - 1} produces {prev.out_features}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_width(self) -> int:
        return self.layers[0].in_features

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_features


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionError(f"features must be 1-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample features must be finite")
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "label", int(self.label))


def forward(net: DenseNetwork, x):
    """Run the float forward pass, returning (pre, post) per layer.

    `x` may be a single vector or a (t, f) batch; outputs follow suit.
    """
    x = np.asarray(x, dtype=np.float64)
    outputs = []
    for idx, layer in enumerate(net.layers):
        if x.shape[-1] != layer.in_features:
            raise DimensionError(
                f"layer {idx} expects input width {layer.in_features}, "
                f"got {x.shape[-1]}"
            )
        pre = x @ layer.weights.T + layer.bias
        post = apply_activation(pre, layer.activation)
        outputs.append((pre, post))
        x = post
    return outputs


def predict(net: DenseNetwork, x) -> int:
    """Class index of the final activation; ties break to the lowest index."""
    final_post = forward(net, x)[-1][1]
    return int(np.argmax(final_post))


def per_layer_calibration_inputs(net: DenseNetwork, samples):
    """Input matrix (t, f_l) seen by each layer under the float network.

    Layer 0 sees the raw features; deeper layers see the float
    post-activations of the previous layer, never quantized outputs.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("calibration sample set must not be empty")
    batch = np.stack([s.features for s in samples])
    inputs = [batch]
    outputs = forward(net, batch)
    for _, post in outputs[:-1]:
        inputs.append(post)
    return inputs
