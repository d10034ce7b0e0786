"""File formats: JSON for models/quantized models/plans, CSV for datasets
and reports.

All files are UTF-8 with LF line endings.  Floats survive a save/load
roundtrip value-identically (shortest round-trip decimal representation).
Loading rejects NaN/Inf and malformed structure outright; nothing partial
is ever returned.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .model import ACTIVATIONS, DenseLayer, DenseNetwork, Sample
from .pipeline import LayerPlan, QuantizedLayer, QuantizedNetwork, RoundingPlan
from .quant import LayerScales, QuantParams

MODEL_VERSION = 1
QUANTIZED_VERSION = 1
PLAN_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent file content."""


def _read_json(path, kind: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{kind} file {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")


def _finite_array(raw, context: str):
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{context}: not a numeric array") from exc
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{context}: contains NaN or Inf")
    return arr


def save_model(net: DenseNetwork, path):
    payload = {
        "version": MODEL_VERSION,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }
    _write_json(payload, path)


def load_model(path) -> DenseNetwork:
    data = _read_json(path, "model")
    if not isinstance(data, dict) or "layers" not in data:
        raise FormatError(f"model file {path}: missing 'layers'")
    layers = []
    for idx, raw in enumerate(data["layers"]):
        context = f"model file {path}, layer {idx}"
        act = raw.get("activation", "none")
        if act not in ACTIVATIONS:
            raise FormatError(f"{context}: unknown activation {act!r}")
        weights = _finite_array(raw.get("weights"), f"{context} weights")
        bias = _finite_array(raw.get("bias"), f"{context} bias")
        if weights.ndim != 2:
            raise FormatError(f"{context}: weights must be rectangular 2-D")
        try:
            layers.append(DenseLayer(weights=weights, bias=bias, activation=act))
        except ValueError as exc:
            raise FormatError(f"{context}: {exc}") from exc
    try:
        return DenseNetwork(layers=tuple(layers))
    except ValueError as exc:
        raise FormatError(f"model file {path}: {exc}") from exc


def _params_payload(p: QuantParams):
    return {"scale": p.scale, "bits": p.bits, "alpha": p.alpha, "beta": p.beta}


def _params_from(raw, context: str) -> QuantParams:
    try:
        return QuantParams(
            scale=float(raw["scale"]),
            bits=int(raw["bits"]),
            alpha=float(raw["alpha"]),
            beta=float(raw["beta"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{context}: bad quantization params ({exc})") from exc


def save_quantized(qnet: QuantizedNetwork, path):
    payload = {
        "version": QUANTIZED_VERSION,
        "bits": qnet.bits,
        "layers": [
            {
                "weight_codes": layer.weight_codes.tolist(),
                "bias_codes": layer.bias_codes.tolist(),
                "weight_params": _params_payload(layer.scales.weight),
                "bias_params": _params_payload(layer.scales.bias),
                "input_params": _params_payload(layer.scales.input),
                "activation": layer.activation,
            }
            for layer in qnet.layers
        ],
    }
    _write_json(payload, path)


def load_quantized(path) -> QuantizedNetwork:
    data = _read_json(path, "quantized model")
    if not isinstance(data, dict) or "layers" not in data or "bits" not in data:
        raise FormatError(f"quantized model file {path}: missing 'bits' or 'layers'")
    bits = int(data["bits"])
    layers = []
    for idx, raw in enumerate(data["layers"]):
        context = f"quantized model file {path}, layer {idx}"
        scales = LayerScales(
            weight=_params_from(raw["weight_params"], context),
            bias=_params_from(raw["bias_params"], context),
            input=_params_from(raw["input_params"], context),
        )
        w_codes = np.asarray(raw["weight_codes"], dtype=np.int64)
        b_codes = np.asarray(raw["bias_codes"], dtype=np.int64)
        if w_codes.ndim != 2 or b_codes.ndim != 1:
            raise FormatError(f"{context}: bad code array shapes")
        for codes, params, name in (
            (w_codes, scales.weight, "weight"),
            (b_codes, scales.bias, "bias"),
        ):
            if codes.min(initial=0) < params.qmin or codes.max(initial=0) > params.qmax:
                raise FormatError(f"{context}: {name} codes outside bit range")
        act = raw.get("activation", "none")
        if act not in ACTIVATIONS:
            raise FormatError(f"{context}: unknown activation {act!r}")
        layers.append(
            QuantizedLayer(
                weight_codes=w_codes,
                bias_codes=b_codes,
                scales=scales,
                bits=bits,
                activation=act,
            )
        )
    return QuantizedNetwork(layers=tuple(layers), bits=bits)


def load_dataset(path):
    """Read a `label,f0,f1,...` CSV into Sample objects."""
    samples = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"dataset file {path}: empty file") from None
        if not header or header[0] != "label":
            raise FormatError(f"dataset file {path}: header must start with 'label'")
        width = len(header) - 1
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise FormatError(
                    f"dataset file {path}, line {line_no}: expected "
                    f"{width + 1} columns, got {len(row)}"
                )
            try:
                label = int(row[0])
                features = np.array([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(
                    f"dataset file {path}, line {line_no}: {exc}"
                ) from exc
            if not np.all(np.isfinite(features)):
                raise FormatError(
                    f"dataset file {path}, line {line_no}: non-finite feature"
                )
            if label < 0:
                raise FormatError(
                    f"dataset file {path}, line {line_no}: negative label"
                )
            samples.append(Sample(features=features, label=label))
    if not samples:
        raise FormatError(f"dataset file {path}: no samples")
    return samples


def save_dataset(samples, path):
    samples = list(samples)
    width = samples[0].features.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label," + ",".join(f"f{i}" for i in range(width)) + "\n")
        for s in samples:
            fh.write(str(s.label) + "," + ",".join(repr(float(v)) for v in s.features) + "\n")


def save_plan(plan: RoundingPlan, path):
    payload = {
        "version": PLAN_VERSION,
        "method": plan.method,
        "config": plan.config,
        "layers": [
            {
                "weight_bits": lp.weight_bits.tolist(),
                "bias_bits": lp.bias_bits.tolist(),
                "energies": None if lp.energies is None else lp.energies.tolist(),
            }
            for lp in plan.layers
        ],
    }
    _write_json(payload, path)


def load_plan(path) -> RoundingPlan:
    data = _read_json(path, "plan")
    if not isinstance(data, dict) or "layers" not in data or "method" not in data:
        raise FormatError(f"plan file {path}: missing 'method' or 'layers'")
    layers = []
    for idx, raw in enumerate(data["layers"]):
        wb = np.asarray(raw["weight_bits"], dtype=np.int8)
        bb = np.asarray(raw["bias_bits"], dtype=np.int8)
        if not (np.isin(wb, (0, 1)).all() and np.isin(bb, (0, 1)).all()):
            raise FormatError(f"plan file {path}, layer {idx}: bits must be 0/1")
        energies = raw.get("energies")
        layers.append(
            LayerPlan(
                weight_bits=wb,
                bias_bits=bb,
                energies=None if energies is None else np.asarray(energies, dtype=np.float64),
            )
        )
    return RoundingPlan(
        method=data["method"], layers=tuple(layers), config=data.get("config", {})
    )


def write_scatter_csv(rows, path):
    """`plan_id,method,cost,accuracy` with 17 significant digits of cost."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("plan_id,method,cost,accuracy\n")
        for plan_id, method, cost, acc in rows:
            fh.write(f"{plan_id},{method},{format(cost, '.17g')},{repr(float(acc))}\n")


def write_compare_csv(rows, path):
    """`bits,method,accuracy,qubo_cost` rows for the comparison report."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bits,method,accuracy,qubo_cost\n")
        for bits, method, acc, cost in rows:
            fh.write(f"{bits},{method},{repr(float(acc))},{format(cost, '.17g')}\n")
