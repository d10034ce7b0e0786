"""Assembly of the per-neuron rounding QUBO matrices.

For one layer with n output neurons and f inputs, every neuron i gets an
(f+1) x (f+1) symmetric matrix S_i over the bits (v_i1..v_if, v_i) such
that v^T S_i v equals neuron i's share of the rescaled reconstruction
error.  Averaged over calibration samples, the matrices share all their
off-diagonal entries; only the diagonals depend on i, so a batch stores
the shared core once.  The full (n*f + n) matrix over all bits is only
assembled at verification scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DenseLayer
from .quant import LayerScales, floor_code, rtn_code

FULL_MATRIX_CAP = 4096


@dataclass(frozen=True)
class QuboMatrix:
    """Dense symmetric matrix with energy evaluation v -> v^T Q v."""

    entries: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.entries, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"QUBO matrix must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("QUBO matrix entries must be finite")
        scale = max(1.0, float(np.abs(q).max()))
        if np.abs(q - q.T).max() > 1e-12 * scale:
            raise ValueError("QUBO matrix must be symmetric")
        object.__setattr__(self, "entries", q)
        q.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def energy(self, v) -> float:
        v = np.asarray(v, dtype=np.float64)
        return float(v @ self.entries @ v)


def _layer_codes(layer: DenseLayer, scales: LayerScales, x):
    """Float pre-activation plus the integer codes entering the objective."""
    x = np.asarray(x, dtype=np.float64)
    y = x @ layer.weights.T + layer.bias
    x_codes = rtn_code(x, scales.s_x).astype(np.float64)
    w_floor = floor_code(layer.weights, scales.s_w).astype(np.float64)
    b_floor = floor_code(layer.bias, scales.s_b).astype(np.float64)
    return y, x_codes, w_floor, b_floor


def residual_d(layer: DenseLayer, scales: LayerScales, x):
    """Per-neuron residual d_i between the rescaled output and its
    all-floors reconstruction.

    d_i = y_i/(s_w s_x) - sum_j floor(w_ij/s_w) * xcode_j
          - r * floor(b_i/s_b),  with r = s_b/(s_x s_w).

    Accepts a single input vector (returns (n,)) or a (t, f) batch
    (returns (t, n)).
    """
    y, x_codes, w_floor, b_floor = _layer_codes(layer, scales, x)
    return (
        y / (scales.s_w * scales.s_x)
        - x_codes @ w_floor.T
        - scales.ratio * b_floor
    )


def build_subproblem_sample(layer: DenseLayer, scales: LayerScales, x):
    """S_i matrices for one calibration vector, as an (n, f+1, f+1) array.

    Layout of S_i: indices 0..f-1 are the weight bits of neuron i, index f
    is its bias bit.  v^T S_i v reproduces the quadratic error term of
    neuron i exactly: diagonal xcode_j*(xcode_j - 2 d_i), off-diagonal
    xcode_j*xcode_k, coupling r*xcode_j on both sides, and r*(r - 2 d_i)
    in the corner.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("build_subproblem_sample takes a single input vector")
    _, x_codes, _, _ = _layer_codes(layer, scales, x)
    d = residual_d(layer, scales, x)
    n, f = layer.out_features, layer.in_features
    r = scales.ratio

    core = np.zeros((f + 1, f + 1))
    core[:f, :f] = np.outer(x_codes, x_codes)
    core[:f, f] = r * x_codes
    core[f, :f] = r * x_codes
    core[f, f] = r * r

    mats = np.broadcast_to(core, (n, f + 1, f + 1)).copy()
    diag_shift = np.zeros((n, f + 1))
    diag_shift[:, :f] = -2.0 * np.outer(d, x_codes)
    diag_shift[:, f] = -2.0 * r * d
    idx = np.arange(f + 1)
    mats[:, idx, idx] += diag_shift
    return mats


@dataclass(frozen=True)
class SubproblemBatch:
    """Averaged S_i matrices of one layer, stored in factored form.

    `gram` holds E[xcode_j * xcode_k], `mean_codes` E[xcode_j],
    `mean_residual` E[d_i], and `residual_codes` E[d_i * xcode_j]; the
    matrix for any neuron is reassembled on demand.
    """

    layer_index: int
    ratio: float
    gram: np.ndarray  # (f, f)
    mean_codes: np.ndarray  # (f,)
    mean_residual: np.ndarray  # (n,)
    residual_codes: np.ndarray  # (n, f)

    @property
    def n(self) -> int:
        return self.mean_residual.shape[0]

    @property
    def f(self) -> int:
        return self.mean_codes.shape[0]

    @property
    def dim(self) -> int:
        return self.f + 1

    def shared_core(self) -> np.ndarray:
        """Off-diagonal core common to every neuron (diagonal included
        without the residual shift)."""
        f, r = self.f, self.ratio
        core = np.zeros((f + 1, f + 1))
        core[:f, :f] = self.gram
        core[:f, f] = r * self.mean_codes
        core[f, :f] = r * self.mean_codes
        core[f, f] = r * r
        return core

    def matrix(self, i: int) -> np.ndarray:
        """E[S_i] for neuron i, dense (f+1) x (f+1)."""
        mat = self.shared_core()
        idx = np.arange(self.f + 1)
        shift = np.empty(self.f + 1)
        shift[: self.f] = -2.0 * self.residual_codes[i]
        shift[self.f] = -2.0 * self.ratio * self.mean_residual[i]
        mat[idx, idx] += shift
        return mat

    def matrices(self):
        for i in range(self.n):
            yield self.matrix(i)

    def energy(self, i: int, v) -> float:
        v = np.asarray(v, dtype=np.float64)
        return float(v @ self.matrix(i) @ v)

    def dump_csv(self, i: int, path):
        """Debug dump of E[S_i] as row-major CSV with 17 significant digits."""
        mat = self.matrix(i)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in mat:
                fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def build_batch(
    layer: DenseLayer, scales: LayerScales, inputs, layer_index: int = 0
) -> SubproblemBatch:
    """Average the per-sample S_i over a (t, f) calibration matrix.

    Only the four moment arrays are accumulated; the shared core is built
    once per layer.  Accumulation runs through float64 matmuls, whose
    blocked summation keeps enough digits for thousands of samples.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    if inputs.shape[0] == 0:
        raise ValueError("calibration set must not be empty")
    t = inputs.shape[0]
    _, x_codes, _, _ = _layer_codes(layer, scales, inputs)
    d = residual_d(layer, scales, inputs)  # (t, n)
    return SubproblemBatch(
        layer_index=layer_index,
        ratio=scales.ratio,
        gram=x_codes.T @ x_codes / t,
        mean_codes=x_codes.mean(axis=0),
        mean_residual=d.mean(axis=0),
        residual_codes=d.T @ x_codes / t,
    )


def build_full_M(
    layer: DenseLayer, scales: LayerScales, inputs, cap: int = FULL_MATRIX_CAP
) -> QuboMatrix:
    """Full averaged QUBO matrix over all n*f + n bits (verification only).

    Variable order is (v_11..v_1f, ..., v_n1..v_nf, v_1..v_n): weight bit
    (i, j) sits at index i*f + j and bias bit i at n*f + i.  Refuses
    dimensions above `cap`.
    """
    n, f = layer.out_features, layer.in_features
    dim = n * f + n
    if dim > cap:
        raise ValueError(
            f"full matrix dimension {dim} exceeds verification cap {cap}; "
            "use the per-neuron subproblems instead"
        )
    batch = build_batch(layer, scales, inputs)
    M = np.zeros((dim, dim))
    for i in range(n):
        sub = batch.matrix(i)
        rows = slice(i * f, (i + 1) * f)
        bias_idx = n * f + i
        M[rows, rows] = sub[:f, :f]
        M[rows, bias_idx] = sub[:f, f]
        M[bias_idx, rows] = sub[f, :f]
        M[bias_idx, bias_idx] = sub[f, f]
    return QuboMatrix(entries=M)
