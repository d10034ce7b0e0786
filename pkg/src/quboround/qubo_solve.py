"""Dense QUBO minimization: exact enumeration and simulated annealing.

Randomness comes exclusively from numpy's PCG64 generator seeded from the
config, so solutions are reproducible across platforms; the generator
name is recorded on every Solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .qubo_build import QuboMatrix

EXACT_DIM_LIMIT = 24
RNG_NAME = "numpy-pcg64"

INIT_RTN_SEED = "rtn_seed"
INIT_ZEROS = "zeros"
INIT_RANDOM = "random"
_INIT_POLICIES = (INIT_RTN_SEED, INIT_ZEROS, INIT_RANDOM)


@dataclass(frozen=True)
class SolveConfig:
    """Annealer knobs.  `sweeps=None` means 100 * dim full passes."""

    seed: int = 42
    restarts: int = 8
    sweeps: int | None = None
    initial_acceptance: float = 0.8
    final_temp_factor: float = 1e-3
    init_policy: str = INIT_RTN_SEED

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.sweeps is not None and self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not (0.0 < self.initial_acceptance < 1.0):
            raise ValueError("initial_acceptance must be in (0, 1)")
        if self.final_temp_factor <= 0:
            raise ValueError("final_temp_factor must be > 0")
        if self.init_policy not in _INIT_POLICIES:
            raise ValueError(f"init_policy must be one of {_INIT_POLICIES}")

    def sweeps_for(self, dim: int) -> int:
        return self.sweeps if self.sweeps is not None else 100 * dim


@dataclass(frozen=True)
class Solution:
    v: np.ndarray
    energy: float
    solver: str
    restarts_used: int = 0
    sweeps_used: int = 0
    rng: str = RNG_NAME


def _as_matrix(Q) -> np.ndarray:
    if isinstance(Q, QuboMatrix):
        return Q.entries
    return np.asarray(Q, dtype=np.float64)


def energy(Q, v) -> float:
    """v^T Q v."""
    q = _as_matrix(Q)
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != q.shape[0]:
        raise ValueError(f"vector length {v.shape[0]} != matrix dim {q.shape[0]}")
    return float(v @ q @ v)


def delta_energy(Q, v, j: int) -> float:
    """Energy change of flipping bit j, in O(dim).

    Uses dE = (1 - 2 v_j) * (Q_jj + 2 * sum_{k != j} Q_jk v_k) for
    symmetric Q.
    """
    q = _as_matrix(Q)
    v = np.asarray(v, dtype=np.float64)
    if not 0 <= j < q.shape[0]:
        raise IndexError(f"flip index {j} out of range for dim {q.shape[0]}")
    row = q[j]
    off = float(row @ v) - q[j, j] * v[j]
    return float((1.0 - 2.0 * v[j]) * (q[j, j] + 2.0 * off))


def solve_exact(Q) -> Solution:
    """Global minimizer by exhaustive enumeration (dim <= 24).

    Ties resolve to the lexicographically smallest bit vector; bit 0 is
    the most significant position of the enumeration so the first
    occurrence of the minimum is already the lexicographic winner.
    """
    q = _as_matrix(Q)
    dim = q.shape[0]
    if dim > EXACT_DIM_LIMIT:
        raise ValueError(
            f"exact enumeration capped at dim {EXACT_DIM_LIMIT}, got {dim}; "
            "use solve_sa"
        )
    shifts = (dim - 1 - np.arange(dim)).astype(np.uint64)
    best_energy = math.inf
    best_v = np.zeros(dim, dtype=np.int8)
    chunk = 1 << 16
    total = 1 << dim
    for start in range(0, total, chunk):
        ints = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        V = ((ints[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies = ((V @ q) * V).sum(axis=1)
        k = int(np.argmin(energies))
        if energies[k] < best_energy:
            best_energy = float(energies[k])
            best_v = V[k].astype(np.int8)
    return Solution(v=best_v, energy=energy(q, best_v), solver="exact")


@njit(cache=True, nogil=True)
def _anneal_kernel(q, v, uniforms, t0, cool, n_sweeps):  # pragma: no cover
    dim = v.shape[0]
    fld = q @ v
    cur = 0.0
    for j in range(dim):
        cur += v[j] * fld[j]
    best = cur
    best_v = v.copy()
    temp = t0
    u = 0
    for _ in range(n_sweeps):
        for j in range(dim):
            delta = 1.0 - 2.0 * v[j]
            de = delta * (q[j, j] + 2.0 * (fld[j] - q[j, j] * v[j]))
            accept = de <= 0.0
            if not accept:
                accept = uniforms[u] < np.exp(-de / temp)
            u += 1
            if accept:
                v[j] += delta
                for k in range(dim):
                    fld[k] += delta * q[k, j]
                cur += de
                if cur < best:
                    best = cur
                    best_v[:] = v
        temp *= cool
    return best_v


def _initial_temperature(q, rng, target_acceptance: float) -> float:
    """T0 such that the median uphill |dE| over 100 random flips is
    accepted with the configured probability."""
    dim = q.shape[0]
    states = rng.integers(0, 2, size=(100, dim)).astype(np.float64)
    flips = rng.integers(0, dim, size=100)
    deltas = np.empty(100)
    for k in range(100):
        deltas[k] = delta_energy(q, states[k], int(flips[k]))
    uphill = deltas[deltas > 0]
    if uphill.size == 0:
        return 1.0
    return max(float(np.median(uphill)) / math.log(1.0 / target_acceptance), 1e-12)


def solve_sa(Q, cfg: SolveConfig = SolveConfig(), seed_vector=None) -> Solution:
    """Simulated annealing with restarts; returns the best vector ever
    visited, never a worse final state.

    The first restart starts from the vector selected by
    `cfg.init_policy` (the supplied `seed_vector` under "rtn_seed",
    falling back to random when none is given); further restarts start
    from random vectors.  With a seed vector supplied, the returned
    energy is never above the seed vector's energy.
    """
    q = _as_matrix(Q)
    dim = q.shape[0]
    sweeps = cfg.sweeps_for(dim)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    candidates = []
    if seed_vector is not None:
        seed_vector = np.asarray(seed_vector, dtype=np.float64)
        if seed_vector.shape[0] != dim:
            raise ValueError("seed_vector length does not match matrix dim")
        candidates.append(seed_vector.copy())

    t0 = _initial_temperature(q, rng, cfg.initial_acceptance)
    cool = cfg.final_temp_factor ** (1.0 / max(sweeps - 1, 1))

    for restart in range(cfg.restarts):
        if restart == 0 and cfg.init_policy == INIT_ZEROS:
            v0 = np.zeros(dim)
        elif restart == 0 and cfg.init_policy == INIT_RTN_SEED and seed_vector is not None:
            v0 = seed_vector.copy()
        else:
            v0 = rng.integers(0, 2, size=dim).astype(np.float64)
        uniforms = rng.random(sweeps * dim)
        best_v = _anneal_kernel(q, v0, uniforms, t0, cool, sweeps)
        candidates.append(best_v.astype(np.float64))

    best = candidates[0]
    best_e = energy(q, best)
    for cand in candidates[1:]:
        e = energy(q, cand)
        if e < best_e:
            best, best_e = cand, e
    return Solution(
        v=best.astype(np.int8),
        energy=best_e,
        solver="sa",
        restarts_used=cfg.restarts,
        sweeps_used=sweeps,
    )
