"""Shared test helpers: random problem generators and independent oracles.

The oracles here deliberately avoid the package's matrix-assembly code
paths: reconstruction errors are computed straight from the dequantization
primitives, and quadratic values by naive term-by-term summation.
"""

import math
import pathlib

import numpy as np

from quboround.model import DenseLayer
from quboround.quant import LayerScales, QuantParams, floor_code, rtn_code

FIXTURE_DIR = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "out"

MNIST1_MODEL = FIXTURE_DIR / "mnist1_model.json"
MNIST1_DATA = FIXTURE_DIR / "mnist1_test.csv"
MICRO_MODEL = FIXTURE_DIR / "micro_model.json"
MICRO_DATA = FIXTURE_DIR / "micro_test.csv"
GOLDEN_FORWARD = FIXTURE_DIR / "golden_forward.json"
GOLDEN_METRICS = FIXTURE_DIR / "golden_metrics.json"


def random_problem(rng, n, f, bits, t=1, activation="none"):
    """Random layer + scales + (t, f) calibration inputs."""
    weights = rng.normal(size=(n, f))
    bias = rng.normal(size=n)
    inputs = rng.normal(size=(t, f))
    layer = DenseLayer(weights=weights, bias=bias, activation=activation)
    scales = LayerScales(
        weight=QuantParams.from_values(weights, bits),
        bias=QuantParams.from_values(bias, bits),
        input=QuantParams.from_values(inputs, bits),
    )
    return layer, scales, inputs


def direct_reconstruction_error(layer, scales, v_w, v_b, x):
    """||y - y_deq(v)||^2 computed straight from the rounding definitions:
    weights/bias go to floor + bit on their grids, inputs to the nearest
    grid point."""
    y = layer.weights @ x + layer.bias
    x_deq = scales.s_x * rtn_code(x, scales.s_x).astype(float)
    w_deq = scales.s_w * (floor_code(layer.weights, scales.s_w) + v_w)
    b_deq = scales.s_b * (floor_code(layer.bias, scales.s_b) + v_b)
    y_deq = w_deq @ x_deq + b_deq
    return float(np.sum((y - y_deq) ** 2))


def naive_neuron_quadratic(x_codes, d_i, r, v):
    """Term-by-term value of one neuron's quadratic form for bit vector
    v = (v_1..v_f, v_bias), summed with plain scalar loops."""
    f = len(x_codes)
    vb = v[f]
    total = 0.0
    for j in range(f):
        total += x_codes[j] * (x_codes[j] - 2.0 * d_i) * v[j] * v[j]
    for j in range(f):
        for k in range(f):
            if k != j:
                total += x_codes[j] * x_codes[k] * v[j] * v[k]
    total += r * (r - 2.0 * d_i) * vb * vb
    for j in range(f):
        total += 2.0 * r * x_codes[j] * vb * v[j]
    return total


def fsum_energy(mat, v):
    """Exactly rounded sum of the matrix entries selected by v (binary).

    With binary v, v^T Q v is the plain sum of the entries Q[j, k] where
    v_j = v_k = 1; math.fsum makes the result independent of summation
    order, so identical entry multisets give bitwise-identical energies.
    """
    mask = np.asarray(v, dtype=bool)
    return math.fsum(np.asarray(mat)[np.ix_(mask, mask)].ravel())
