"""Run the desk-scale experiments on the committed fixtures.

Produces, under --out (default results/):
  compare_<fixture>.csv   accuracy and QUBO cost for both rounding
                          methods at 8/4/2/1 bits
  scatter_<fixture>.csv   random-plan cost/accuracy scatter at int2,
                          plus the two reference plans

Usage:
  python3 scripts/run_experiments.py [--out results] [--seed 42]
"""

import argparse
import pathlib
import sys

import numpy as np

from quboround.evaluate import accuracy, qubo_cost, scatter_sample
from quboround.io_formats import (
    load_dataset,
    load_model,
    write_compare_csv,
    write_scatter_csv,
)
from quboround.pipeline import layer_scales, quantize_adaround, quantize_rtn, rtn_plan
from quboround.qubo_solve import SolveConfig

FIXTURE_DIR = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "out"
FIXTURES = ("mnist1", "micro")
BIT_WIDTHS = (8, 4, 2, 1)


def calibration_subset(samples, fraction, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    count = max(1, int(round(fraction * len(samples))))
    idx = rng.choice(len(samples), size=count, replace=False)
    return [samples[i] for i in sorted(idx)]


def compare_rows(net, samples, calib, seed):
    rows = []
    for bits in BIT_WIDTHS:
        q_ada, plan_ada, batches = quantize_adaround(
            net, calib, bits, SolveConfig(seed=seed)
        )
        scales_list, _ = layer_scales(net, calib, bits)
        plan_rtn = rtn_plan(net, scales_list)
        q_rtn = quantize_rtn(net, calib, bits)
        rows.append((bits, "adaround", accuracy(q_ada, samples), qubo_cost(batches, plan_ada)))
        rows.append((bits, "rtn", accuracy(q_rtn, samples), qubo_cost(batches, plan_rtn)))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--calib-frac", type=float, default=0.1)
    parser.add_argument("--scatter-samples", type=int, default=200)
    args = parser.parse_args(argv)

    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for name in FIXTURES:
        net = load_model(FIXTURE_DIR / f"{name}_model.json")
        samples = load_dataset(FIXTURE_DIR / f"{name}_test.csv")
        calib = calibration_subset(samples, args.calib_frac, args.seed)
        print(f"[{name}] float accuracy = {accuracy(net, samples):.4f}")

        rows = compare_rows(net, samples, calib, args.seed)
        write_compare_csv(rows, out_dir / f"compare_{name}.csv")
        for bits, method, acc, cost in rows:
            print(f"[{name}] int{bits} {method:8s} accuracy={acc:.4f} cost={cost:.6g}")

        scatter = scatter_sample(
            net, samples, bits=2, count=args.scatter_samples, seed=args.seed
        )
        write_scatter_csv(scatter, out_dir / f"scatter_{name}.csv")
        cost = [r[2] for r in scatter]
        acc = [r[3] for r in scatter]
        pearson = float(np.corrcoef(cost, acc)[0, 1])
        print(f"[{name}] int2 scatter Pearson(cost, accuracy) = {pearson:.3f}")

    print(f"wrote CSVs to {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
