"""Post-training quantization of dense networks via per-neuron rounding
QUBOs, with round-to-nearest as the baseline."""

from .model import DenseLayer, DenseNetwork, Sample, forward, predict
from .quant import LayerScales, QuantParams
from .qubo_build import QuboMatrix, SubproblemBatch, build_batch, build_full_M
from .qubo_solve import SolveConfig, Solution, energy, solve_exact, solve_sa
from .pipeline import (
    QuantizedNetwork,
    RoundingPlan,
    apply_plan,
    dequantized_forward,
    quantize_adaround,
    quantize_rtn,
)
from .evaluate import accuracy, layer_frobenius_report, qubo_cost, scatter_sample

__version__ = "0.1.0"
