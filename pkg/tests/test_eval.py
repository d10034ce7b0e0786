import numpy as np
import pytest

from quboround.evaluate import (
    accuracy,
    layer_frobenius_report,
    qubo_cost,
    random_plan,
    scatter_sample,
)
from quboround.io_formats import load_dataset, load_model
from quboround.model import DenseLayer, DenseNetwork, Sample
from quboround.pipeline import (
    apply_plan,
    layer_scales,
    quantize_adaround,
    quantize_rtn,
    rtn_plan,
)
from quboround.qubo_build import build_batch, residual_d
from quboround.qubo_solve import SolveConfig

from util import MICRO_DATA, MICRO_MODEL, naive_neuron_quadratic, random_problem
from quboround.quant import rtn_code


def one_layer_setup(seed, n=3, f=4, bits=3, t=6):
    rng = np.random.default_rng(seed)
    layer, _, inputs = random_problem(rng, n, f, bits, t=t)
    net = DenseNetwork(layers=(layer,))
    samples = [Sample(features=x, label=int(rng.integers(0, n))) for x in inputs]
    scales_list, calib = layer_scales(net, samples, bits)
    batch = build_batch(net.layers[0], scales_list[0], calib[0])
    return rng, net, samples, scales_list, batch


class TestAccuracy:
    def test_perfect_single_sample(self):
        net = DenseNetwork(layers=(DenseLayer(weights=np.eye(2), bias=np.zeros(2)),))
        assert accuracy(net, [Sample(features=np.array([0.0, 1.0]), label=1)]) == 1.0

    def test_empty_sample_set_rejected(self):
        net = DenseNetwork(layers=(DenseLayer(weights=np.eye(2), bias=np.zeros(2)),))
        with pytest.raises(ValueError):
            accuracy(net, [])

    def test_label_out_of_range_rejected(self):
        net = DenseNetwork(layers=(DenseLayer(weights=np.eye(2), bias=np.zeros(2)),))
        with pytest.raises(ValueError, match="out of range"):
            accuracy(net, [Sample(features=np.zeros(2), label=5)])

    def test_float_accuracy_matches_committed_golden(self):
        import json

        from util import GOLDEN_METRICS, MNIST1_DATA, MNIST1_MODEL

        with open(GOLDEN_METRICS, "r", encoding="utf-8") as fh:
            golden = json.load(fh)
        net = load_model(MNIST1_MODEL)
        samples = load_dataset(MNIST1_DATA)
        assert accuracy(net, samples) == golden["fixtures"]["mnist1"]["float_accuracy"]


class TestQuboCost:
    def test_zero_plan_costs_nothing(self):
        _, net, samples, scales_list, batch = one_layer_setup(1)
        plan = rtn_plan(net, scales_list)
        zero = plan.__class__(
            method="zero",
            layers=(
                plan.layers[0].__class__(
                    weight_bits=np.zeros_like(plan.layers[0].weight_bits),
                    bias_bits=np.zeros_like(plan.layers[0].bias_bits),
                ),
            ),
            config={},
        )
        assert qubo_cost([batch], zero) == 0.0

    def test_adaround_cost_never_above_rtn(self):
        _, net, samples, scales_list, _ = one_layer_setup(3, bits=2)
        _, plan_ada, batches = quantize_adaround(net, samples, 2, SolveConfig(seed=0))
        plan_rtn = rtn_plan(net, scales_list)
        assert qubo_cost(batches, plan_ada) <= qubo_cost(batches, plan_rtn) + 1e-9

    def test_random_plan_matches_naive_term_sum(self):
        rng, net, samples, scales_list, batch = one_layer_setup(5)
        plan = random_plan(net, rng)
        layer, scales = net.layers[0], scales_list[0]
        calib = np.stack([s.features for s in samples])
        codes = rtn_code(calib, scales.s_x).astype(float)
        d = residual_d(layer, scales, calib)
        naive = 0.0
        for i in range(layer.out_features):
            v = plan.neuron_vector(0, i)
            per_sample = [
                naive_neuron_quadratic(codes[a], d[a, i], scales.ratio, v)
                for a in range(len(samples))
            ]
            naive += float(np.mean(per_sample))
        assert qubo_cost([batch], plan) == pytest.approx(naive, rel=1e-9)


def headroom_setup(seed, n=3, f=4, bits=4, t=6):
    """One-layer problem whose scales leave clip headroom: every
    floor-code plus rounding bit stays inside the code range, so clipped
    codes coincide with the unclipped rounding objective."""
    from quboround.quant import LayerScales, QuantParams

    rng = np.random.default_rng(seed)
    qmin, qmax = -(2 ** (bits - 1)), 2 ** (bits - 1) - 1

    def tensor(scale, size):
        codes = rng.integers(qmin, qmax - 1, size=size).astype(float)
        return scale * (codes + rng.uniform(0.0, 1.0, size=size))

    s_w, s_b, s_x = 0.25, 0.125, 0.5
    weights = tensor(s_w, (n, f))
    bias = tensor(s_b, n)
    inputs = rng.normal(size=(t, f))

    def params(scale, values):
        return QuantParams(
            scale=scale, bits=bits, alpha=float(values.min()), beta=float(values.max())
        )

    scales = LayerScales(
        weight=params(s_w, weights), bias=params(s_b, bias), input=params(s_x, inputs)
    )
    layer = DenseLayer(weights=weights, bias=bias, activation="none")
    net = DenseNetwork(layers=(layer,))
    samples = [Sample(features=x, label=0) for x in inputs]
    batch = build_batch(layer, scales, inputs)
    return rng, net, samples, [scales], batch


class TestFrobeniusReport:
    def test_grid_aligned_model_has_zero_error(self):
        from test_pipeline import grid_network

        net, samples = grid_network()
        qnet = quantize_rtn(net, samples, bits=8)
        (err,) = layer_frobenius_report(net, qnet, samples)
        assert err == pytest.approx(0.0, abs=1e-20)

    def test_zero_plan_reproduces_scaled_residual_constant(self):
        _, net, samples, scales_list, _ = headroom_setup(7)
        plan = rtn_plan(net, scales_list)
        zero = plan.__class__(
            method="zero",
            layers=(
                plan.layers[0].__class__(
                    weight_bits=np.zeros_like(plan.layers[0].weight_bits),
                    bias_bits=np.zeros_like(plan.layers[0].bias_bits),
                ),
            ),
            config={},
        )
        qnet = apply_plan(net, scales_list, zero)
        (err,) = layer_frobenius_report(net, qnet, samples)
        scales = scales_list[0]
        calib = np.stack([s.features for s in samples])
        d = residual_d(net.layers[0], scales, calib)
        expected = (scales.s_w * scales.s_x) ** 2 * float(
            np.mean(np.sum(d**2, axis=1))
        )
        assert err == pytest.approx(expected, rel=1e-9)

    def test_identity_links_error_to_cost(self):
        rng, net, samples, scales_list, batch = headroom_setup(9, bits=4)
        plan = random_plan(net, rng)
        qnet = apply_plan(net, scales_list, plan)
        (err,) = layer_frobenius_report(net, qnet, samples)
        scales = scales_list[0]
        calib = np.stack([s.features for s in samples])
        d = residual_d(net.layers[0], scales, calib)
        const = float(np.mean(np.sum(d**2, axis=1)))
        cost = qubo_cost([batch], plan)
        assert err == pytest.approx(
            (scales.s_w * scales.s_x) ** 2 * (const + cost), rel=1e-9
        )


class TestScatter:
    @pytest.fixture
    def micro(self):
        return load_model(MICRO_MODEL), load_dataset(MICRO_DATA)[:60]

    def test_row_count_and_methods(self, micro):
        net, samples = micro
        rows = scatter_sample(net, samples, bits=2, count=5, seed=0)
        assert len(rows) == 7
        assert [r[1] for r in rows[-2:]] == ["rtn", "adaround"]
        assert all(r[1] == "random" for r in rows[:5])

    def test_deterministic_per_seed(self, micro):
        net, samples = micro
        a = scatter_sample(net, samples, bits=2, count=4, seed=3)
        b = scatter_sample(net, samples, bits=2, count=4, seed=3)
        assert a == b

    def test_adaround_row_has_minimal_cost(self, micro):
        net, samples = micro
        rows = scatter_sample(net, samples, bits=2, count=10, seed=1)
        costs = [r[2] for r in rows]
        assert rows[-1][2] <= min(costs) + 1e-9

    def test_rtn_row_accuracy_matches_direct_rtn(self, micro):
        net, samples = micro
        rows = scatter_sample(net, samples, bits=2, count=2, seed=2)
        rtn_row = rows[-2]
        direct = accuracy(quantize_rtn(net, samples, 2), samples)
        assert rtn_row[3] == direct

    def test_count_must_be_positive(self, micro):
        net, samples = micro
        with pytest.raises(ValueError):
            scatter_sample(net, samples, bits=2, count=0, seed=0)
