"""Per-tensor linear quantization primitives.

All codes are stored with a zero-point of 0: the scale s and the clip
range [qmin, qmax] fully determine the integer grid, and the original
[alpha, beta] range is kept alongside so any other zero-point convention
can be reconstructed from the file.  Dequantization is always ``s * code``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def round_tn(x):
    """Round to nearest integer, halves away from zero.

    Works elementwise on arrays; returns int64.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.trunc(x + np.copysign(0.5, x)).astype(np.int64)


@dataclass(frozen=True)
class QuantParams:
    """Scale / clip range for one tensor at a given bit width."""

    scale: float
    bits: int
    alpha: float
    beta: float
    zero_point: int = 0

    def __post_init__(self):
        if not (1 <= self.bits <= 8):
            raise ValueError(f"bits must be in [1, 8], got {self.bits}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")

    @property
    def qmin(self) -> int:
        return -(2 ** (self.bits - 1))

    @property
    def qmax(self) -> int:
        return 2 ** (self.bits - 1) - 1

    @classmethod
    def from_values(cls, values, bits: int) -> "QuantParams":
        """Compute scale from the min/max range of `values`.

        s = (beta - alpha) / (2^bits - 1).  A degenerate range
        (beta == alpha) falls back to s = 1 so every code is produced by
        plain rounding of a constant; such tensors dequantize with a
        bounded constant error.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise ValueError("cannot compute quantization range of an empty collection")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite values in quantization input")
        alpha = float(values.min())
        beta = float(values.max())
        if beta == alpha:
            scale = 1.0
        else:
            scale = (beta - alpha) / (2**bits - 1)
        return cls(scale=scale, bits=bits, alpha=alpha, beta=beta)


@dataclass(frozen=True)
class LayerScales:
    """The three per-tensor grids of one layer: weights, bias, inputs."""

    weight: QuantParams
    bias: QuantParams
    input: QuantParams

    @property
    def s_w(self) -> float:
        return self.weight.scale

    @property
    def s_b(self) -> float:
        return self.bias.scale

    @property
    def s_x(self) -> float:
        return self.input.scale

    @property
    def ratio(self) -> float:
        """Coupling ratio s_b / (s_x * s_w) between bias and weight bits."""
        return self.s_b / (self.s_x * self.s_w)


def _check_finite(a):
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite input to quantization")
    return a


def rtn_quantize(a, p: QuantParams):
    """Round-to-nearest integer code, clipped to the storable range."""
    a = _check_finite(a)
    # pre-clip in float so a huge a/scale ratio cannot overflow the
    # integer cast; anything past the range rounds to the clip bound
    x = np.clip(a / p.scale, p.qmin - 1.0, p.qmax + 1.0)
    code = round_tn(x) + p.zero_point
    return np.clip(code, p.qmin, p.qmax)


def rtn_dequantize(a, p: QuantParams):
    """s * round_tn(a / s): nearest grid point, unclipped."""
    a = _check_finite(a)
    return p.scale * round_tn(a / p.scale).astype(np.float64)


def ada_dequantize(a, v, p: QuantParams):
    """s * (floor(a / s) + v) with v in {0, 1}: round down or up."""
    a = _check_finite(a)
    v = np.asarray(v)
    return p.scale * (np.floor(a / p.scale) + v)


def floor_code(a, s: float):
    """floor(a / s) as int64 (the rounded-down grid index)."""
    a = _check_finite(a)
    return np.floor(a / s).astype(np.int64)


def rtn_code(a, s: float):
    """round_tn(a / s) as int64 (the nearest grid index, unclipped)."""
    a = _check_finite(a)
    return round_tn(a / s)


def rtn_equivalent_bits(a, s: float):
    """The 0/1 rounding choice that reproduces round-to-nearest exactly.

    Defined as rtn_code - floor_code, which is 1 iff the fractional part
    of a/s is >= 0.5 except at exact negative halves, where it follows
    the away-from-zero tie rule so that floor + bit == rtn everywhere.
    """
    return (rtn_code(a, s) - floor_code(a, s)).astype(np.int8)
