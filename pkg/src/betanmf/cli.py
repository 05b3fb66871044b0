"""Command-line frontend.

Three subcommands: ``fit`` runs a single factorization and writes the
factors and trace, ``bench`` runs the multi-seed comparison of the two
update families and writes a JSON report, and ``verify`` runs the
randomized property suites.  Synthetic low-rank data can be generated in
place of an input file with ``--synthetic F,N,K,noise``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import format_report, run_bench
from .core import DivergenceDomainError
from .matrixio import MatrixParseError, load_matrix, save_factors, save_trace
from .solver import (
    Algorithm,
    SolverConfig,
    Termination,
    fit,
    synthetic_low_rank,
)
from .verify import DEFAULT_BETA_GRID, run_property_suites


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _kappa_value(text):
    if text == "auto":
        return None
    value = float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"kappa must be nonnegative, got {text}")
    return value


def _synthetic_spec(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            "expected --synthetic F,N,K,noise (e.g. 100,80,5,0.1)"
        )
    try:
        f, n, k = int(parts[0]), int(parts[1]), int(parts[2])
        noise = float(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse synthetic spec {text!r}")
    if min(f, n, k) < 1 or noise < 0.0:
        raise argparse.ArgumentTypeError(f"invalid synthetic spec {text!r}")
    return f, n, k, noise


def _beta_grid(text):
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse beta grid {text!r}")


def _add_data_arguments(parser):
    parser.add_argument("--input", help="matrix file to factorize")
    parser.add_argument("--format", choices=("csv", "mtx"), default="csv",
                        help="input file format (default csv)")
    parser.add_argument("--synthetic", type=_synthetic_spec, metavar="F,N,K,NOISE",
                        help="generate low-rank synthetic data instead of reading a file")
    parser.add_argument("--synthetic-seed", type=int, default=0,
                        help="seed of the synthetic data generator (default 0)")


def _add_fit_arguments(parser):
    parser.add_argument("--beta", type=float, required=True,
                        help="divergence shape parameter")
    parser.add_argument("--rank", type=_positive_int, required=True,
                        help="factorization rank")
    parser.add_argument("--sub-iters", type=_positive_int, default=1,
                        help="inner sweeps per outer iteration (default 1)")
    parser.add_argument("--tol", type=float, default=1e-5,
                        help="relative-decrease stopping tolerance (default 1e-5)")
    parser.add_argument("--kappa", type=_kappa_value, default=0.0,
                        help="data shift; a number, or 'auto' for the default rule "
                             "(default 0)")
    parser.add_argument("--seed", type=int, default=0,
                        help="initialization seed (default 0)")
    parser.add_argument("--max-iters", type=_positive_int, default=5000,
                        help="outer iteration cap (default 5000)")
    parser.add_argument("--heuristic-gamma-one", action="store_true",
                        help="replace the update exponent by 1 (may end at worse "
                             "solutions with the joint updates)")


def _load_values(args):
    if args.synthetic is not None and args.input is not None:
        raise ValueError("--input and --synthetic are mutually exclusive")
    if args.synthetic is not None:
        f, n, k, noise = args.synthetic
        return synthetic_low_rank(f, n, k, noise=noise, seed=args.synthetic_seed)
    if args.input is None:
        raise ValueError("either --input or --synthetic is required")
    return load_matrix(args.input, args.format).values


def _config_from_args(args, algorithm):
    return SolverConfig(
        beta=args.beta,
        rank=args.rank,
        algorithm=Algorithm(algorithm),
        sub_iters=args.sub_iters,
        tol=args.tol,
        kappa=args.kappa,
        seed=args.seed,
        max_outer_iters=args.max_iters,
        heuristic_gamma_one=args.heuristic_gamma_one,
    )


def cmd_fit(args):
    values = _load_values(args)
    config = _config_from_args(args, args.algo)
    result = fit(values, config)
    os.makedirs(args.out, exist_ok=True)
    save_factors(result, args.out)
    save_trace(result, os.path.join(args.out, "trace.csv"))
    last = result.trace[-1]
    per_entry = last.objective / (values.shape[0] * values.shape[1])
    print(f"{result.termination.value} after {result.iterations} outer iterations "
          f"({last.seconds:.3f}s)")
    print(f"objective {last.objective:.10g} ({per_entry:.10g} per entry)")
    print(f"kkt residuals ({last.kkt_w:.6g}, {last.kkt_h:.6g})")
    print(f"factors and trace written to {args.out}")
    return 0 if result.termination == Termination.CONVERGED else 2


def cmd_bench(args):
    values = _load_values(args)
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    report = run_bench(
        values,
        beta=args.beta,
        rank=args.rank,
        n_seeds=args.seeds,
        algorithms=algorithms,
        base_seed=args.seed,
        jobs=args.jobs,
        sub_iters=args.sub_iters,
        tol=args.tol,
        kappa=args.kappa,
        max_outer_iters=args.max_iters,
        heuristic_gamma_one=args.heuristic_gamma_one,
    )
    print(format_report(report))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        print(f"report written to {args.report}")
    return 0


def cmd_verify(args):
    ok, lines = run_property_suites(
        trials=args.trials,
        beta_grid=args.beta_grid,
        seed=args.seed,
        counterexample_path=args.counterexample,
    )
    for line in lines:
        print(line)
    print("all property suites passed" if ok else "property suite FAILURES detected")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="betanmf",
        description="Beta-divergence NMF: block and joint multiplicative updates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="run a single factorization")
    _add_data_arguments(p_fit)
    _add_fit_arguments(p_fit)
    p_fit.add_argument("--algo", choices=("bmm", "jmm"), required=True,
                       help="update family")
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.set_defaults(func=cmd_fit)

    p_bench = sub.add_parser("bench", help="multi-seed comparison of both families")
    _add_data_arguments(p_bench)
    _add_fit_arguments(p_bench)
    p_bench.add_argument("--seeds", type=_positive_int, default=25,
                         help="number of initializations (default 25)")
    p_bench.add_argument("--algos", default="bmm,jmm",
                         help="comma-separated families to run (default bmm,jmm)")
    p_bench.add_argument("--report", help="write the JSON report here")
    p_bench.add_argument("--jobs", type=_positive_int, default=1,
                         help="worker processes; 1 = sequential, cleanest timing "
                              "(default 1)")
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="run the randomized property suites")
    p_verify.add_argument("--trials", type=_positive_int, default=25,
                          help="random instances per suite (default 25)")
    p_verify.add_argument("--beta-grid", type=_beta_grid,
                          default=DEFAULT_BETA_GRID,
                          help="comma-separated beta values "
                               "(default -0.5,0,0.5,1,1.5,2,3)")
    p_verify.add_argument("--seed", type=int, default=0,
                          help="seed of the instance generator (default 0)")
    p_verify.add_argument("--counterexample", default="verify-counterexample.npz",
                          help="where to serialize the first failing instance")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: pass --kappa KAPPA (or --kappa auto) to shift the data "
              "into the divergence domain", file=sys.stderr)
        return 1
    except (MatrixParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
