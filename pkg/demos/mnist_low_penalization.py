"""Sinkhorn, Greenkhorn and Greedy Stochastic Sinkhorn on MNIST digit pairs at lambda = 10.

Pairs of 28 x 28 digits become 784-bin histograms (zero pixels smoothed to
1e-6 of the image mass) and the transport cost is the Manhattan distance
between pixels. All solvers get the same budget in row/column updates; the
table shows the median distance to the transport polytope across pairs at a
few checkpoints.

    python demos/mnist_low_penalization.py [--pairs 5] [--images PATH]

Without ``--images`` the 256-image sample under tests/data is used. Larger
pair counts take a few seconds per pair and solver.
"""

import argparse
from pathlib import Path

import numpy as np

from otscale import SolverConfig
from otscale.experiment import ExperimentSpec, run_experiment

SAMPLE = Path(__file__).resolve().parents[1] / "tests" / "data" / "mnist-sample-256-idx3-ubyte"

parser = argparse.ArgumentParser()
parser.add_argument("--pairs", type=int, default=5)
parser.add_argument("--images", default=str(SAMPLE))
parser.add_argument("--budget", type=int, default=40, help="budget in multiples of n = 784")
args = parser.parse_args()

n = 784
budget = args.budget * n
configs = (
    SolverConfig("sinkhorn", epsilon=1e-12, max_updates=budget),
    SolverConfig("greenkhorn", epsilon=1e-12, max_updates=budget),
    SolverConfig("stochastic", psi="poly:1", epsilon=1e-12, max_updates=budget),
)
spec = ExperimentSpec("mnist", 10.0, configs, pairs=args.pairs, seed=0, mnist_path=args.images)
result = run_experiment(spec)

checkpoints = [k * n for k in sorted({2, 5, 10, 20, args.budget}) if k <= args.budget]
print(f"median dist over {args.pairs} pairs")
print(f"{'updates':>10}" + "".join(f"{cfg.label:>22}" for cfg in configs))
for k in checkpoints:
    row = [np.median(result.dists_at(cfg.label, k)) for cfg in configs]
    print(f"{k:>10}" + "".join(f"{x:>22.4g}" for x in row))
