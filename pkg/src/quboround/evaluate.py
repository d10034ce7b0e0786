"""Metrics: accuracy, plan QUBO cost, reconstruction error, scatter runs."""

from __future__ import annotations

import numpy as np

from .model import DenseNetwork, forward, per_layer_calibration_inputs
from .quant import rtn_code
from .pipeline import (
    METHOD_ADAROUND,
    METHOD_RTN,
    LayerPlan,
    QuantizedNetwork,
    RoundingPlan,
    apply_plan,
    dequantized_forward,
    layer_scales,
    quantize_adaround,
    rtn_plan,
)
from .qubo_solve import SolveConfig


def _final_scores(model, batch):
    if isinstance(model, QuantizedNetwork):
        return dequantized_forward(model, batch)[-1][1]
    return forward(model, batch)[-1][1]


def accuracy(model, samples) -> float:
    """Fraction of samples whose argmax matches the label."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot evaluate accuracy on an empty sample set")
    batch = np.stack([s.features for s in samples])
    labels = np.array([s.label for s in samples])
    n_classes = model.num_classes
    if labels.max() >= n_classes:
        raise ValueError(
            f"label {labels.max()} out of range for a {n_classes}-class model"
        )
    scores = _final_scores(model, batch)
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def qubo_cost(batches, plan: RoundingPlan) -> float:
    """Total plan cost: sum over layers and neurons of v_i^T E[S_i] v_i."""
    total = 0.0
    for layer_idx, batch in enumerate(batches):
        for i in range(batch.n):
            total += batch.energy(i, plan.neuron_vector(layer_idx, i))
    return total


def layer_frobenius_report(net: DenseNetwork, qnet: QuantizedNetwork, samples):
    """Mean squared reconstruction error ||y - y_deq||^2 per layer.

    Uses the float network's per-layer inputs (the same inputs the
    subproblems are averaged over), so the values tie back to the plan's
    QUBO cost via the scaled-residual identity.
    """
    calib = per_layer_calibration_inputs(net, samples)
    report = []
    for layer, qlayer, inputs in zip(net.layers, qnet.layers, calib):
        y = inputs @ layer.weights.T + layer.bias
        codes = rtn_code(inputs, qlayer.scales.s_x).astype(np.float64)
        y_deq = (
            qlayer.scales.s_w
            * qlayer.scales.s_x
            * (codes @ qlayer.weight_codes.T.astype(np.float64))
            + qlayer.scales.s_b * qlayer.bias_codes.astype(np.float64)
        )
        report.append(float(np.mean(np.sum((y - y_deq) ** 2, axis=1))))
    return report


def random_plan(net: DenseNetwork, rng) -> RoundingPlan:
    layers = []
    for layer in net.layers:
        layers.append(
            LayerPlan(
                weight_bits=rng.integers(0, 2, size=layer.weights.shape).astype(
                    np.int8
                ),
                bias_bits=rng.integers(0, 2, size=layer.bias.shape).astype(np.int8),
            )
        )
    return RoundingPlan(method="random", layers=tuple(layers), config={})


def scatter_sample(
    net: DenseNetwork,
    samples,
    bits: int,
    count: int,
    seed: int,
    cfg: SolveConfig | None = None,
):
    """(cost, accuracy) rows for `count` random plans plus the RTN and
    optimized plans, deterministic per seed.

    Returns a list of (plan_id, method, cost, accuracy) tuples; the same
    samples serve as calibration set and accuracy set.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = cfg or SolveConfig(seed=seed)
    scales_list, _ = layer_scales(net, samples, bits)
    qnet_ada, plan_ada, batches = quantize_adaround(net, samples, bits, cfg)

    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for plan_id in range(count):
        plan = random_plan(net, rng)
        qnet = apply_plan(net, scales_list, plan)
        rows.append(
            (plan_id, "random", qubo_cost(batches, plan), accuracy(qnet, samples))
        )
    plan_r = rtn_plan(net, scales_list)
    qnet_r = apply_plan(net, scales_list, plan_r)
    rows.append(
        (count, METHOD_RTN, qubo_cost(batches, plan_r), accuracy(qnet_r, samples))
    )
    rows.append(
        (
            count + 1,
            METHOD_ADAROUND,
            qubo_cost(batches, plan_ada),
            accuracy(qnet_ada, samples),
        )
    )
    return rows
