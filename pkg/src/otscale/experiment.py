"""Benchmark protocol: many histogram pairs, several solvers, aggregated traces.

Every pair gets its own generator derived from the master seed, and every
solver run gets a seed derived from ``(master seed, pair index, solver
label)``. Numeric outputs are therefore a pure function of the
:class:`ExperimentSpec`, apart from wall-clock columns.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import grid_cost_matrix, make_kernel
from .data import load_mnist_images, mnist_like_pair, random_histogram_pair
from .errors import OTScaleError
from .samplers import derive_seed, make_rng
from .solvers import solve
from .traceio import write_experiment

DATASETS = ("mnist", "random", "mnist-like")
FORMATS = ("csv", "json")
MNIST_SIDE = 28


class RunError(OTScaleError):
    """A solver run failed inside an experiment; the cause is chained."""

    def __init__(self, message, pair=None, label=None):
        super().__init__(message)
        self.pair = pair
        self.label = label


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines the numbers produced by an experiment.

    ``n`` is only used by the ``random`` dataset; the image datasets are
    fixed at 28 x 28 = 784 bins. ``trace_every`` defaults to ``n``.
    """

    dataset: str
    lam: float
    solvers: tuple
    pairs: int = 20
    seed: int = 0
    n: int | None = None
    mnist_path: str | None = None
    trace_every: int | None = None
    output: str | None = None
    fmt: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}; choose from {DATASETS}")
        if self.dataset == "mnist" and not self.mnist_path:
            raise ValueError("the mnist dataset needs mnist_path")
        if self.dataset == "random" and (self.n is None or self.n < 2):
            raise ValueError("the random dataset needs n >= 2")
        if self.pairs < 1:
            raise ValueError("pairs must be at least 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        solvers = tuple(self.solvers)
        if not solvers:
            raise ValueError("at least one solver configuration is required")
        if len({(s.epsilon, s.max_updates) for s in solvers}) != 1:
            raise ValueError("all solver configurations must share epsilon and max_updates")
        labels = [s.label for s in solvers]
        if len(set(labels)) != len(labels):
            raise ValueError(f"solver labels must be unique, got {labels}")
        object.__setattr__(self, "solvers", solvers)

    @property
    def dim(self):
        return self.n if self.dataset == "random" else MNIST_SIDE * MNIST_SIDE

    @property
    def checkpoint_every(self):
        return self.trace_every or self.dim

    @property
    def epsilon(self):
        return self.solvers[0].epsilon

    @property
    def max_updates(self):
        return self.solvers[0].max_updates

    def metadata(self, config=None):
        meta = {
            "dataset": self.dataset,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "max_updates": self.max_updates,
            "seed": self.seed,
            "n": self.dim,
            "pairs": self.pairs,
            "trace_every": self.checkpoint_every,
        }
        if config is not None:
            meta["algorithm"] = config.algorithm
            meta["label"] = config.label
            meta["psi"] = None if config.psi is None else str(config.psi)
            meta["block_size"] = config.block_size
            meta["run_seed"] = config.seed
        return meta


@dataclass
class AggregateTrace:
    """Mean and spread of the distance across pairs at shared checkpoints."""

    label: str
    update_count: np.ndarray
    mean_dist: np.ndarray
    std_dist: np.ndarray
    mean_dual: np.ndarray

    def __len__(self):
        return self.update_count.size

    def rows(self):
        for k in range(len(self)):
            yield (
                int(self.update_count[k]),
                float(self.mean_dist[k]),
                float(self.std_dist[k]),
                float(self.mean_dual[k]),
            )


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    aggregates: dict
    runs: dict = field(default_factory=dict)
    run_configs: dict = field(default_factory=dict)

    def final_dists(self, label):
        return np.array([res.final_dist for res in self.runs[label]])

    def dists_at(self, label, update_count):
        return np.array([res.trace.value_at(update_count) for res in self.runs[label]])


def build_cost(spec):
    """Cost matrix shared by every pair of the experiment."""
    if spec.dataset == "random":
        rng = make_rng(derive_seed(spec.seed, "cost"))
        return rng.random((spec.n, spec.n))
    return grid_cost_matrix(MNIST_SIDE)


def histogram_pair(spec, pair_index, images=None):
    """The ``pair_index``-th (source, target) pair of the experiment."""
    rng = make_rng(derive_seed(spec.seed, "pair", pair_index))
    if spec.dataset == "random":
        return random_histogram_pair(spec.n, rng)
    if spec.dataset == "mnist-like":
        return mnist_like_pair(rng, side=MNIST_SIDE)
    if images is None:
        images = load_mnist_images(spec.mnist_path)
    if images.shape != (MNIST_SIDE, MNIST_SIDE):
        raise ValueError(f"expected {MNIST_SIDE}x{MNIST_SIDE} images, got {images.shape}")
    i, j = rng.choice(len(images), size=2, replace=False)
    return images[int(i)], images[int(j)]


def run_config(spec, config, pair_index):
    """Solver configuration for one pair: derived seed and shared checkpoint cadence."""
    seed = derive_seed(spec.seed, pair_index, config.label)
    return replace(config, seed=seed, trace_every=spec.checkpoint_every)


def _run_pair(spec, kernel, pair_index, images=None):
    r, c = histogram_pair(spec, pair_index, images)
    out = []
    for config in spec.solvers:
        cfg = run_config(spec, config, pair_index)
        try:
            out.append((cfg, solve(kernel, r, c, cfg)))
        except OTScaleError as exc:
            raise RunError(f"pair {pair_index}, {cfg.label}: {exc}", pair=pair_index, label=cfg.label) from exc
    return out


def _run_pair_worker(args):
    spec, kernel, pair_index = args
    return _run_pair(spec, kernel, pair_index)


def aggregate(label, traces, every, max_updates):
    """Align traces on checkpoints ``0, every, 2*every, ...`` and summarize.

    A run is read as a step function: the value at a checkpoint is the last
    recorded value at or before it, so runs that stopped early keep their
    final value.
    """
    checkpoints = np.arange(0, max_updates + 1, every, dtype=np.int64)
    dist = np.array([[t.value_at(k) for k in checkpoints] for t in traces])
    dual = np.array([[t.value_at(k, "dual_value") for k in checkpoints] for t in traces])
    return AggregateTrace(
        label=label,
        update_count=checkpoints,
        mean_dist=dist.mean(axis=0),
        std_dist=dist.std(axis=0),
        mean_dual=dual.mean(axis=0),
    )


def run_experiment(spec):
    """Run every solver on every pair, aggregate, and write files if ``spec.output`` is set."""
    kernel = make_kernel(build_cost(spec), spec.lam)
    images = load_mnist_images(spec.mnist_path) if spec.dataset == "mnist" else None

    if spec.jobs > 1:
        # image files are re-read per worker instead of pickling the stack
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            per_pair = list(pool.map(_run_pair_worker, [(spec, kernel, p) for p in range(spec.pairs)]))
    else:
        per_pair = [_run_pair(spec, kernel, p, images) for p in range(spec.pairs)]

    runs = {config.label: [] for config in spec.solvers}
    run_configs = {config.label: [] for config in spec.solvers}
    for results in per_pair:
        for cfg, res in results:
            runs[cfg.label].append(res)
            run_configs[cfg.label].append(cfg)
    aggregates = {
        label: aggregate(label, [res.trace for res in results], spec.checkpoint_every, spec.max_updates)
        for label, results in runs.items()
    }
    result = ExperimentResult(spec=spec, aggregates=aggregates, runs=runs, run_configs=run_configs)

    if spec.output:
        os.makedirs(spec.output, exist_ok=True)
        write_experiment(result, spec.output, spec.fmt)
    return result
