"""``otbench``: run one solver on one pair, or benchmark several solvers over many pairs.

Exit codes: 0 converged / completed, 2 budget exhausted without convergence
(``solve`` only), 1 any error.
"""

import argparse
import sys

from .core import make_kernel
from .errors import OTScaleError
from .experiment import DATASETS, ExperimentSpec, build_cost, histogram_pair, run_config, run_experiment
from .solvers import ALGORITHMS, SolverConfig, solve
from .traceio import write_trace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are errors (1); 2 is reserved for an exhausted budget
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _algorithm(text):
    # "stochastic" or "stochastic=poly:1" (inline psi overrides --psi)
    name, _, psi = text.partition("=")
    if name not in ALGORITHMS:
        raise argparse.ArgumentTypeError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return name, psi or None


def _add_common(p, bench):
    p.add_argument("--dataset", choices=DATASETS, required=True)
    p.add_argument("--mnist-path", help="IDX3 image file (required for --dataset mnist)")
    p.add_argument("--n", type=int, help="histogram size for --dataset random")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    if bench:
        p.add_argument(
            "--algorithm", type=_algorithm, action="append", required=True,
            help="repeatable; ALGO or ALGO=PSI, e.g. stochastic=softmax:0.01",
        )
    else:
        p.add_argument("--algorithm", type=_algorithm, required=True, help="ALGO or ALGO=PSI")
    p.add_argument("--psi", help="uniform | poly:A | softmax:T | greedy (stochastic kinds)")
    p.add_argument("--block-size", type=int, default=1)
    p.add_argument("--max-updates", type=int, required=True)
    p.add_argument("--trace-every", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, help="trace file (solve) or output directory (bench)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), required=True)


def build_parser():
    parser = _Parser(prog="otbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("solve", help="one solver, one histogram pair"), bench=False)
    bench = sub.add_parser("bench", help="several solvers over many pairs, aggregated")
    _add_common(bench, bench=True)
    bench.add_argument("--pairs", type=int, default=20)
    bench.add_argument("--jobs", type=int, default=1, help="worker processes (pairs run concurrently)")
    return parser


def _configs(args, algorithms):
    configs = []
    for name, inline_psi in algorithms:
        psi = inline_psi or args.psi
        configs.append(
            SolverConfig(
                algorithm=name,
                epsilon=args.epsilon,
                max_updates=args.max_updates,
                psi=psi if name in ("stochastic", "block-stochastic") else None,
                block_size=args.block_size,
                seed=args.seed,
                trace_every=args.trace_every,
            )
        )
    return configs


def _spec(args, configs, pairs, jobs=1):
    return ExperimentSpec(
        dataset=args.dataset,
        lam=args.lam,
        solvers=tuple(configs),
        pairs=pairs,
        seed=args.seed,
        n=args.n,
        mnist_path=args.mnist_path,
        trace_every=args.trace_every,
        output=args.output if args.command == "bench" else None,
        fmt=args.fmt,
        jobs=jobs,
    )


def cmd_solve(args):
    spec = _spec(args, _configs(args, [args.algorithm]), pairs=1)
    kernel = make_kernel(build_cost(spec), spec.lam)
    r, c = histogram_pair(spec, 0)
    cfg = run_config(spec, spec.solvers[0], 0)
    res = solve(kernel, r, c, cfg)
    meta = spec.metadata(cfg)
    meta.update(converged=res.converged, updates_used=res.updates_used)
    write_trace(res.trace, args.fmt, args.output, meta)
    status = "converged" if res.converged else "budget exhausted"
    print(f"{cfg.label}: {status} after {res.updates_used} updates, dist={res.final_dist:.6g}")
    return EXIT_OK if res.converged else EXIT_BUDGET


def cmd_bench(args):
    spec = _spec(args, _configs(args, args.algorithm), pairs=args.pairs, jobs=args.jobs)
    result = run_experiment(spec)
    last = spec.max_updates // spec.checkpoint_every * spec.checkpoint_every
    for label, agg in result.aggregates.items():
        print(f"{label}: mean dist at {last} updates = {agg.mean_dist[-1]:.6g} (std {agg.std_dist[-1]:.3g})")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_bench(args)
    except (OTScaleError, ValueError, OSError) as exc:
        print(f"otbench: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
