"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 invalid input or
parameters, 5 verification failed.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, mmio
from .matrix import spectral_norm
from .select import one_pass_sparsify
from .sparsifier import relative_epsilon, sample_size, sparsify, threshold_zero

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVALID = 4
EXIT_FAILED = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elemsparse",
        description="Element-wise sparsification of dense square matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output_required=False, epsilon_required=True):
        p.add_argument("--input", required=True, help="Matrix Market file")
        p.add_argument("--output", required=output_required)
        p.add_argument("--epsilon", type=_positive_float, required=epsilon_required)
        p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("sparsify", help="sketch an in-memory matrix")
    common(p, output_required=True)
    p.add_argument("--relative", action="store_true",
                   help="treat epsilon as relative to ||A||_2 (two passes)")
    p.add_argument("--samples", type=_positive_int, help="override the sample budget s")

    p = sub.add_parser("stream", help="sketch in one pass over a Matrix Market file")
    common(p, output_required=True)
    p.add_argument("--relative", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--samples", type=_positive_int)
    p.add_argument("--frob-sq", type=_positive_float,
                   help="||A||_F^2, used to set s when --samples is absent")

    p = sub.add_parser("verify", help="measure ||A - sketch||_2 against epsilon")
    common(p, epsilon_required=False)
    p.add_argument("--sketch", required=True)

    p = sub.add_parser("experiment", help="repeat sparsification over seeds")
    common(p)
    p.add_argument("--relative", action="store_true")
    p.add_argument("--samples", type=_positive_int)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("moments", help="exact second moments of the per-draw deviation")
    common(p, epsilon_required=False)
    return parser


def _read(path):
    try:
        return mmio.read_matrix(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None


def _write_sketch(path, sketch, extra):
    try:
        mmio.write_coordinate(path, sketch.n, sketch.rows, sketch.cols, sketch.values)
        meta = {
            "n": sketch.n,
            "s": sketch.s,
            "epsilon": sketch.epsilon,
            "seed": sketch.seed,
            "threshold": sketch.threshold,
            "nnz": sketch.nnz,
            **extra,
        }
        with open(path + ".json", "w", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _resolve_epsilon(args, a):
    if not args.relative:
        return args.epsilon
    if not np.any(a):
        raise CliError(
            "relative accuracy requires a non-zero matrix (||A||_2 > 0)", EXIT_INVALID
        )
    return relative_epsilon(a, args.epsilon)


def cmd_sparsify(args) -> int:
    a = _read(args.input)
    eps = _resolve_epsilon(args, a)
    sketch = sparsify(a, eps, args.seed, s=args.samples)
    mode = {"mode": "relative" if args.relative else "absolute"}
    if args.relative:
        mode["epsilon_rel"] = args.epsilon
    _write_sketch(args.output, sketch, {"command": "sparsify", **mode})
    print(f"n={sketch.n} s={sketch.s} nnz={sketch.nnz} threshold={sketch.threshold!r}")
    return EXIT_OK


def cmd_stream(args) -> int:
    if args.relative:
        raise CliError("--relative needs ||A||_2 before sampling and cannot run in one pass",
                       EXIT_USAGE)
    try:
        stream = mmio.MatrixMarketStream(args.input)
    except OSError as exc:
        raise CliError(f"cannot read {args.input}: {exc.strerror or exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    if args.samples is not None:
        s = args.samples
    elif args.frob_sq is not None:
        s = sample_size(stream.n, args.frob_sq, args.epsilon)
    else:
        stream.close()
        raise CliError("stream mode needs --samples or --frob-sq", EXIT_USAGE)
    try:
        sketch = one_pass_sparsify(stream, args.epsilon, s, args.seed)
    except OSError as exc:
        raise CliError(f"cannot read {args.input}: {exc.strerror or exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    _write_sketch(args.output, sketch,
                  {"command": "stream", "mode": "absolute", "reads": stream.reads})
    print(f"n={sketch.n} s={sketch.s} nnz={sketch.nnz} threshold={sketch.threshold!r} "
          f"reads={stream.reads}")
    return EXIT_OK


def cmd_verify(args) -> int:
    a = _read(args.input)
    sk = _read(args.sketch)
    if a.shape != sk.shape:
        raise CliError(f"dimension mismatch: {a.shape} vs {sk.shape}", EXIT_INVALID)
    eps = args.epsilon
    if eps is None:
        sidecar = args.sketch + ".json"
        if not os.path.exists(sidecar):
            raise CliError("no --epsilon given and no sketch sidecar found", EXIT_USAGE)
        with open(sidecar) as fh:
            eps = json.load(fh).get("epsilon")
        if eps is None:
            raise CliError(f"{sidecar} has no epsilon", EXIT_INVALID)
    err = spectral_norm(a - sk)
    ok = err <= eps
    n = a.shape[0]
    print(f"error={err!r} epsilon={eps!r} failure_bound={1.0 / n!r} "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_experiment(args) -> int:
    a = _read(args.input)
    eps = _resolve_epsilon(args, a)
    report = analysis.run_experiment(
        a, eps, args.trials, args.seed, s=args.samples, descriptor=args.input
    )
    report.config.update(
        {"input": args.input, "relative": args.relative, "epsilon_arg": args.epsilon}
    )
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.output)
    print(
        f"failure_rate={report.empirical_failure_rate!r} "
        f"bound={report.theoretical_failure_bound!r} "
        f"lemma2_violations={report.lemma2_violations}",
        file=sys.stderr,
    )
    ok = (
        report.empirical_failure_rate <= report.theoretical_failure_bound
        and report.lemma2_violations == 0
    )
    return EXIT_OK if ok else EXIT_FAILED


def cmd_moments(args) -> int:
    a = _read(args.input)
    if args.epsilon is not None:
        a = threshold_zero(a, args.epsilon)
    try:
        diag = analysis.exact_second_moment(a)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    d = diag.to_dict()
    if args.output:
        _emit(json.dumps(d, indent=2, sort_keys=True) + "\n", args.output)
    with np.printoptions(precision=12, suppress=True):
        print("E[M M^T] =")
        print(diag.closed_form)
    print(f"discrepancy={diag.discrepancy!r} agreement={'OK' if diag.agrees else 'MISMATCH'}")
    print(f"norm={d['moment_norm']!r} norm_t={d['moment_norm_t']!r} "
          f"bound={diag.variance_bound!r}")
    return EXIT_OK if diag.agrees else EXIT_FAILED


COMMANDS = {
    "sparsify": cmd_sparsify,
    "stream": cmd_stream,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
    "moments": cmd_moments,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
