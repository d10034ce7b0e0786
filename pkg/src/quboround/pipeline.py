"""End-to-end quantization: scales -> subproblems -> solves -> codes.

Layers are processed sequentially (each layer's input scale is calibrated
from the float network), while the per-neuron solves inside a layer can
run on a thread pool; every subproblem derives its own RNG seed from
(run seed, layer, neuron), so results do not depend on scheduling.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import DenseLayer, DenseNetwork, apply_activation, per_layer_calibration_inputs
from .quant import (
    LayerScales,
    QuantParams,
    floor_code,
    rtn_code,
    rtn_equivalent_bits,
)
from .qubo_build import SubproblemBatch, build_batch
from .qubo_solve import EXACT_DIM_LIMIT, SolveConfig, solve_exact, solve_sa

METHOD_ADAROUND = "adaround"
METHOD_RTN = "rtn"


@dataclass(frozen=True)
class LayerPlan:
    weight_bits: np.ndarray  # (n, f) in {0, 1}
    bias_bits: np.ndarray  # (n,) in {0, 1}
    energies: np.ndarray | None = None  # per-neuron achieved QUBO energy


@dataclass(frozen=True)
class RoundingPlan:
    method: str
    layers: tuple
    config: dict

    def layer(self, idx: int) -> LayerPlan:
        return self.layers[idx]

    def neuron_vector(self, layer_idx: int, i: int) -> np.ndarray:
        """Subproblem bit vector (v_i1..v_if, v_i) for one neuron."""
        lp = self.layers[layer_idx]
        return np.concatenate(
            [lp.weight_bits[i].astype(np.float64), [float(lp.bias_bits[i])]]
        )


@dataclass(frozen=True)
class QuantizedLayer:
    weight_codes: np.ndarray  # (n, f) int64, clipped to the bit range
    bias_codes: np.ndarray  # (n,) int64
    scales: LayerScales
    bits: int
    activation: str

    def dequantized_weights(self) -> np.ndarray:
        return self.scales.s_w * self.weight_codes.astype(np.float64)

    def dequantized_bias(self) -> np.ndarray:
        return self.scales.s_b * self.bias_codes.astype(np.float64)


@dataclass(frozen=True)
class QuantizedNetwork:
    layers: tuple
    bits: int

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weight_codes.shape[0]


def layer_scales(net: DenseNetwork, samples, bits: int):
    """Per-layer (weight, bias, input) grids from full tensor ranges and
    the float-propagated calibration inputs."""
    calib = per_layer_calibration_inputs(net, samples)
    scales = []
    for layer, inputs in zip(net.layers, calib):
        scales.append(
            LayerScales(
                weight=QuantParams.from_values(layer.weights, bits),
                bias=QuantParams.from_values(layer.bias, bits),
                input=QuantParams.from_values(inputs, bits),
            )
        )
    return scales, calib


def _clip(codes, params: QuantParams):
    return np.clip(codes, params.qmin, params.qmax)


def rtn_plan_layer(layer: DenseLayer, scales: LayerScales) -> LayerPlan:
    """The rounding bits that reproduce round-to-nearest exactly."""
    return LayerPlan(
        weight_bits=rtn_equivalent_bits(layer.weights, scales.s_w),
        bias_bits=rtn_equivalent_bits(layer.bias, scales.s_b),
    )


def rtn_plan(net: DenseNetwork, scales_list, config=None) -> RoundingPlan:
    layers = tuple(
        rtn_plan_layer(layer, s) for layer, s in zip(net.layers, scales_list)
    )
    return RoundingPlan(method=METHOD_RTN, layers=layers, config=dict(config or {}))


def apply_plan(net: DenseNetwork, scales_list, plan: RoundingPlan) -> QuantizedNetwork:
    """Turn rounding bits into clipped integer codes; idempotent and
    deterministic."""
    qlayers = []
    bits = None
    for layer, scales, lp in zip(net.layers, scales_list, plan.layers):
        if lp.weight_bits.shape != layer.weights.shape:
            raise ValueError(
                f"plan weight bits {lp.weight_bits.shape} do not match layer "
                f"shape {layer.weights.shape}"
            )
        w_codes = _clip(
            floor_code(layer.weights, scales.s_w) + lp.weight_bits, scales.weight
        )
        b_codes = _clip(
            floor_code(layer.bias, scales.s_b) + lp.bias_bits, scales.bias
        )
        bits = scales.weight.bits
        qlayers.append(
            QuantizedLayer(
                weight_codes=w_codes.astype(np.int64),
                bias_codes=b_codes.astype(np.int64),
                scales=scales,
                bits=bits,
                activation=layer.activation,
            )
        )
    return QuantizedNetwork(layers=tuple(qlayers), bits=bits)


def quantize_rtn(net: DenseNetwork, samples, bits: int) -> QuantizedNetwork:
    """Round-to-nearest baseline: code = clip(round_tn(a / s))."""
    scales_list, _ = layer_scales(net, samples, bits)
    qlayers = []
    for layer, scales in zip(net.layers, scales_list):
        qlayers.append(
            QuantizedLayer(
                weight_codes=_clip(
                    rtn_code(layer.weights, scales.s_w), scales.weight
                ).astype(np.int64),
                bias_codes=_clip(
                    rtn_code(layer.bias, scales.s_b), scales.bias
                ).astype(np.int64),
                scales=scales,
                bits=bits,
                activation=layer.activation,
            )
        )
    return QuantizedNetwork(layers=tuple(qlayers), bits=bits)


def subproblem_seed(seed: int, layer_idx: int, neuron: int) -> int:
    """Scheduling-independent per-subproblem seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(layer_idx, neuron))
    return int(ss.generate_state(1, np.uint64)[0])


def _solve_neuron(batch: SubproblemBatch, i, cfg, layer_idx, seed_bits, use_exact):
    mat = batch.matrix(i)
    if use_exact:
        if mat.shape[0] > EXACT_DIM_LIMIT:
            raise ValueError(
                f"layer {layer_idx}: subproblem dim {mat.shape[0]} too large "
                "for exact solving"
            )
        sol = solve_exact(mat)
    else:
        sub_cfg = dataclasses.replace(cfg, seed=subproblem_seed(cfg.seed, layer_idx, i))
        sol = solve_sa(mat, sub_cfg, seed_vector=seed_bits)
    return sol


def quantize_adaround(
    net: DenseNetwork,
    samples,
    bits: int,
    cfg: SolveConfig = SolveConfig(),
    use_exact: bool = False,
    threads: int = 1,
):
    """Optimized rounding: solve each neuron's QUBO subproblem, seeded at
    the round-to-nearest bits so it can never score worse than RTN.

    Returns (QuantizedNetwork, RoundingPlan, batches) where `batches` are
    the per-layer averaged subproblem matrices used for the solves.
    """
    scales_list, calib = layer_scales(net, samples, bits)
    plan_layers = []
    batches = []
    for layer_idx, (layer, scales, inputs) in enumerate(
        zip(net.layers, scales_list, calib)
    ):
        batch = build_batch(layer, scales, inputs, layer_index=layer_idx)
        batches.append(batch)
        base = rtn_plan_layer(layer, scales)
        n, f = layer.out_features, layer.in_features

        def solve_one(i):
            seed_bits = np.concatenate(
                [base.weight_bits[i].astype(np.float64), [float(base.bias_bits[i])]]
            )
            return _solve_neuron(batch, i, cfg, layer_idx, seed_bits, use_exact)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                solutions = list(pool.map(solve_one, range(n)))
        else:
            solutions = [solve_one(i) for i in range(n)]

        weight_bits = np.empty((n, f), dtype=np.int8)
        bias_bits = np.empty(n, dtype=np.int8)
        energies = np.empty(n)
        for i, sol in enumerate(solutions):
            weight_bits[i] = sol.v[:f]
            bias_bits[i] = sol.v[f]
            energies[i] = sol.energy
        plan_layers.append(
            LayerPlan(weight_bits=weight_bits, bias_bits=bias_bits, energies=energies)
        )

    plan = RoundingPlan(
        method=METHOD_ADAROUND,
        layers=tuple(plan_layers),
        config={
            "bits": bits,
            "seed": cfg.seed,
            "restarts": cfg.restarts,
            "sweeps": cfg.sweeps,
            "solver": "exact" if use_exact else "sa",
        },
    )
    return apply_plan(net, scales_list, plan), plan, batches


def dequantized_forward(qnet: QuantizedNetwork, x):
    """Forward pass through the dequantized network.

    Each layer recodes its float input with its own input scale
    (unclipped nearest-grid codes, as in the objective), evaluates
    y = s_w s_x (W_codes @ x_codes) + s_b b_codes, then applies the
    activation in float.  Returns (pre, post) per layer.
    """
    x = np.asarray(x, dtype=np.float64)
    outputs = []
    for layer in qnet.layers:
        x_codes = rtn_code(x, layer.scales.s_x).astype(np.float64)
        pre = (
            layer.scales.s_w
            * layer.scales.s_x
            * (x_codes @ layer.weight_codes.T.astype(np.float64))
            + layer.scales.s_b * layer.bias_codes.astype(np.float64)
        )
        post = apply_activation(pre, layer.activation)
        outputs.append((pre, post))
        x = post
    return outputs


def predict_quantized(qnet: QuantizedNetwork, x) -> int:
    final_post = dequantized_forward(qnet, x)[-1][1]
    return int(np.argmax(final_post))
