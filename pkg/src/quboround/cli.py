"""Command line interface: quantize / eval / compare / scatter.

Exit codes: 0 success, 1 usage error, 2 data or model error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import evaluate, io_formats, pipeline
from .io_formats import FormatError
from .model import DimensionError
from .qubo_solve import SolveConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="quboround", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--data", required=True, help="dataset CSV file")
        p.add_argument(
            "--seed", type=int, default=DEFAULT_SEED, help="run seed (default 42)"
        )
        p.add_argument(
            "--threads",
            type=int,
            default=os.cpu_count() or 1,
            help="worker threads for per-neuron solves (default: available cores)",
        )

    q = sub.add_parser("quantize", help="quantize a model and write it out")
    add_common(q)
    q.add_argument("--bits", type=int, required=True, help="bit width in [1, 8]")
    q.add_argument(
        "--method",
        choices=(pipeline.METHOD_ADAROUND, pipeline.METHOD_RTN),
        required=True,
    )
    q.add_argument(
        "--calib-frac",
        type=float,
        default=0.1,
        help="fraction of --data used for calibration (default 0.1)",
    )
    q.add_argument(
        "--calib-data",
        default=None,
        help="separate calibration CSV; overrides --calib-frac sampling",
    )
    q.add_argument("--restarts", type=int, default=8, help="annealer restarts (default 8)")
    q.add_argument(
        "--sweeps",
        type=int,
        default=None,
        help="annealer sweeps per restart (default 100 * dim)",
    )
    q.add_argument(
        "--exact",
        action="store_true",
        help="use exhaustive enumeration instead of annealing (small layers only)",
    )
    q.add_argument("--out", required=True, help="output quantized model JSON")
    q.add_argument("--plan-out", default=None, help="optional rounding plan JSON")

    e = sub.add_parser("eval", help="print model accuracy on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument(
        "--quantized",
        action="store_true",
        help="treat --model as a quantized model file",
    )

    c = sub.add_parser("compare", help="accuracy/cost table for both methods")
    add_common(c)
    c.add_argument(
        "--bits-list",
        default="8,4,2,1",
        help="comma-separated bit widths (default 8,4,2,1)",
    )
    c.add_argument("--calib-frac", type=float, default=0.1)
    c.add_argument("--calib-data", default=None)
    c.add_argument("--out", required=True, help="output report CSV")

    s = sub.add_parser("scatter", help="cost/accuracy scatter of random plans")
    add_common(s)
    s.add_argument("--bits", type=int, required=True)
    s.add_argument("--samples", type=int, required=True, help="number of random plans")
    s.add_argument("--out", required=True, help="output scatter CSV")

    return parser


def _calibration_subset(samples, frac: float, seed: int):
    import numpy as np

    if not (0.0 < frac <= 1.0):
        raise UsageError(f"--calib-frac must be in (0, 1], got {frac}")
    rng = np.random.Generator(np.random.PCG64(seed))
    count = max(1, int(round(frac * len(samples))))
    idx = rng.choice(len(samples), size=count, replace=False)
    return [samples[i] for i in sorted(idx)]


def _load_calibration(args, samples):
    if getattr(args, "calib_data", None):
        return io_formats.load_dataset(args.calib_data)
    return _calibration_subset(samples, args.calib_frac, args.seed)


def _cmd_quantize(args) -> int:
    if not 1 <= args.bits <= 8:
        raise UsageError(f"--bits must be in [1, 8], got {args.bits}")
    net = io_formats.load_model(args.model)
    samples = io_formats.load_dataset(args.data)
    calib = _load_calibration(args, samples)
    print(
        f"quantize method={args.method} bits={args.bits} seed={args.seed} "
        f"calibration_samples={len(calib)} rng=numpy-pcg64"
    )
    start = time.perf_counter()
    plan = None
    if args.method == pipeline.METHOD_RTN:
        qnet = pipeline.quantize_rtn(net, calib, args.bits)
    else:
        cfg = SolveConfig(seed=args.seed, restarts=args.restarts, sweeps=args.sweeps)
        qnet, plan, _ = pipeline.quantize_adaround(
            net, calib, args.bits, cfg, use_exact=args.exact, threads=args.threads
        )
    elapsed = time.perf_counter() - start
    io_formats.save_quantized(qnet, args.out)
    if plan is not None and args.plan_out:
        io_formats.save_plan(plan, args.plan_out)
    print(f"wrote {args.out} in {elapsed:.3f}s")
    if plan is not None:
        for layer_idx, lp in enumerate(plan.layers):
            for i, e in enumerate(lp.energies):
                print(f"{layer_idx},{i},{format(e, '.17g')}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    if args.quantized:
        model = io_formats.load_quantized(args.model)
    else:
        model = io_formats.load_model(args.model)
    samples = io_formats.load_dataset(args.data)
    print(f"accuracy={evaluate.accuracy(model, samples)}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        bits_list = [int(b) for b in args.bits_list.split(",") if b]
    except ValueError:
        raise UsageError(f"bad --bits-list {args.bits_list!r}") from None
    if not bits_list or any(not 1 <= b <= 8 for b in bits_list):
        raise UsageError(f"--bits-list entries must be in [1, 8], got {args.bits_list!r}")
    net = io_formats.load_model(args.model)
    samples = io_formats.load_dataset(args.data)
    calib = _load_calibration(args, samples)
    print(
        f"compare bits={bits_list} seed={args.seed} "
        f"calibration_samples={len(calib)} rng=numpy-pcg64"
    )
    rows = []
    for bits in bits_list:
        cfg = SolveConfig(seed=args.seed)
        qnet_ada, plan_ada, batches = pipeline.quantize_adaround(
            net, calib, bits, cfg, threads=args.threads
        )
        scales_list, _ = pipeline.layer_scales(net, calib, bits)
        plan_rtn = pipeline.rtn_plan(net, scales_list)
        qnet_rtn = pipeline.apply_plan(net, scales_list, plan_rtn)
        rows.append(
            (
                bits,
                pipeline.METHOD_ADAROUND,
                evaluate.accuracy(qnet_ada, samples),
                evaluate.qubo_cost(batches, plan_ada),
            )
        )
        rows.append(
            (
                bits,
                pipeline.METHOD_RTN,
                evaluate.accuracy(qnet_rtn, samples),
                evaluate.qubo_cost(batches, plan_rtn),
            )
        )
    io_formats.write_compare_csv(rows, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_scatter(args) -> int:
    if args.samples < 1:
        raise UsageError(f"--samples must be >= 1, got {args.samples}")
    if not 1 <= args.bits <= 8:
        raise UsageError(f"--bits must be in [1, 8], got {args.bits}")
    net = io_formats.load_model(args.model)
    samples = io_formats.load_dataset(args.data)
    print(f"scatter bits={args.bits} plans={args.samples} seed={args.seed} rng=numpy-pcg64")
    cfg = SolveConfig(seed=args.seed)
    rows = evaluate.scatter_sample(net, samples, args.bits, args.samples, args.seed, cfg)
    io_formats.write_scatter_csv(rows, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "quantize": _cmd_quantize,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "scatter": _cmd_scatter,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, DimensionError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # invariant violations and everything unexpected
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
