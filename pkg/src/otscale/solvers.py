"""Sinkhorn, Greenkhorn, Greedy Stochastic Sinkhorn and their block variants.

Every algorithm is measured in the same unit: one rescaling of a single row
or column. A full Sinkhorn iteration therefore counts as ``2n`` updates, a
block step as the number of indices in the block.
"""

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import ScalingPair, dist_l1
from .errors import DegenerateError, DimensionError, NumericalError
from .samplers import (
    ProbabilityFunction,
    evaluate_psi,
    make_rng,
    sample_block,
    sample_index,
    top_d_indices,
)
from .violations import (
    apply_block_update,
    apply_index_update,
    cached_dual,
    init_state,
    maybe_resync,
)

ALGORITHMS = ("sinkhorn", "greenkhorn", "stochastic", "block-greedy", "block-stochastic")
STOCHASTIC = ("stochastic", "block-stochastic")
BLOCK = ("block-greedy", "block-stochastic")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solver run.

    ``psi`` may be given as a string (``"poly:1"``); it defaults to
    ``poly:1`` for the stochastic kinds. ``trace_every`` and
    ``resync_every`` default to ``n`` and ``10 n`` once the problem size is
    known; ``resync_every=0`` disables periodic resynchronization.
    """

    algorithm: str = "greenkhorn"
    epsilon: float = 1e-2
    max_updates: int = 100_000
    psi: ProbabilityFunction | str | None = None
    block_size: int = 1
    seed: int = 0
    trace_every: int | None = None
    resync_every: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_updates < 1:
            raise ValueError("max_updates must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.trace_every is not None and self.trace_every < 1:
            raise ValueError("trace_every must be at least 1")
        if self.resync_every is not None and self.resync_every < 0:
            raise ValueError("resync_every must be nonnegative")
        psi = self.psi
        if self.algorithm in STOCHASTIC:
            psi = ProbabilityFunction.parse(psi if psi is not None else "poly:1")
        elif psi is not None:
            psi = ProbabilityFunction.parse(psi)
        object.__setattr__(self, "psi", psi)

    @property
    def label(self):
        """Human-readable identity used for seeding and file names."""
        name = self.algorithm
        if self.algorithm in STOCHASTIC:
            name += f"[{self.psi}]"
        if self.algorithm in BLOCK:
            name += f"-d{self.block_size}"
        return name


class TraceRecord(NamedTuple):
    update_count: int
    dist_l1: float
    dual_value: float
    elapsed_ns: int


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)

    def append(self, update_count, dist, dual, elapsed_ns):
        if self.records and update_count <= self.records[-1].update_count:
            raise ValueError("trace update counts must be strictly increasing")
        self.records.append(TraceRecord(int(update_count), float(dist), float(dual), int(elapsed_ns)))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        return np.array([getattr(rec, name) for rec in self.records])

    def value_at(self, update_count, name="dist_l1"):
        """Value of ``name`` as of ``update_count`` (last record at or before it)."""
        counts = self.column("update_count")
        pos = int(np.searchsorted(counts, update_count, side="right")) - 1
        if pos < 0:
            raise ValueError(f"no record at or before update {update_count}")
        return getattr(self.records[pos], name)


@dataclass
class SolveResult:
    scaling: object
    updates_used: int
    converged: bool
    final_dist: float
    trace: ConvergenceTrace
    state: object = None


def _w(h):
    return np.asarray(getattr(h, "weights", h), dtype=np.float64)


def sinkhorn_step(kernel, scaling, r, c):
    """One alternating pass: ``u' = r / (A v)`` then ``v' = c / (A^T u')``.

    Returns a new :class:`~otscale.core.ScalingPair`.
    """
    r, c = _w(r), _w(c)
    n = kernel.n
    av = kernel.matvec(scaling.v)
    u = r / av
    _require_positive(u, "u after row pass", 0)
    atu = kernel.rmatvec(u)
    v = c / atu
    _require_positive(v, "v after column pass", n)
    return ScalingPair(u, v)


def _require_positive(x, what, offset):
    ok = np.isfinite(x) & (x > 0)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise NumericalError(f"{what} is nonpositive or not finite", index=offset + bad, value=float(x[bad]))


def greenkhorn_step(kernel, scaling, state, r, c):
    """Rescale the row or column with the largest violation (lowest index on ties)."""
    i = int(np.argmax(state.violations))
    if not state.violations[i] > 0:
        raise DegenerateError("all violations are zero; the iterate has converged")
    apply_index_update(state, kernel, scaling, i, r, c)
    return scaling, state


def stochastic_step(kernel, scaling, state, r, c, psi, rng):
    """Sample a row or column with probability ``psi(violations)`` and rescale it."""
    p = evaluate_psi(psi, state.violations)
    i = sample_index(p, rng)
    apply_index_update(state, kernel, scaling, i, r, c)
    return scaling, state


def block_step(kernel, scaling, state, r, c, config, rng, block_size=None):
    """Select ``d`` coordinates from one violation snapshot and update them together.

    ``block_size`` overrides ``config.block_size`` (used to clip the last
    block to the remaining budget).
    """
    d = config.block_size if block_size is None else block_size
    d = min(d, 2 * state.n)
    if config.algorithm == "block-greedy":
        if not np.max(state.violations) > 0:
            raise DegenerateError("all violations are zero; the iterate has converged")
        indices = top_d_indices(state.violations, d)
    elif config.algorithm == "block-stochastic":
        indices = sample_block(evaluate_psi(config.psi, state.violations), d, rng)
    else:
        raise ValueError(f"block_step does not handle {config.algorithm!r}")
    apply_block_update(state, kernel, scaling, indices, r, c)
    return scaling, state


def solve(kernel, r, c, config):
    """Run ``config.algorithm`` from ``u = v = 1`` until ``dist < epsilon`` or the budget ends.

    Running out of budget is a normal outcome (``converged=False``). The
    trace holds the initial point, every crossing of a multiple of
    ``trace_every`` and the final point.
    """
    r, c = _w(r), _w(c)
    n = kernel.n
    if r.size != n or c.size != n:
        raise DimensionError(f"kernel is {n}x{n} but histograms have lengths {r.size}, {c.size}")
    every = config.trace_every or n
    resync_every = 10 * n if config.resync_every is None else config.resync_every
    eps = config.epsilon
    budget = config.max_updates

    scaling = ScalingPair.ones(n)
    state = init_state(kernel, scaling, r, c)
    rng = make_rng(config.seed)
    trace = ConvergenceTrace()
    start = time.perf_counter_ns()

    def record(count, dist):
        trace.append(count, dist, cached_dual(state, scaling, r, c), time.perf_counter_ns() - start)

    dist = dist_l1(state, r, c)
    record(0, dist)
    updates = 0
    converged = dist < eps
    algo = config.algorithm

    try:
        while not converged and updates < budget:
            before = updates
            if algo == "sinkhorn":
                if updates + 2 * n > budget:
                    break
                scaling = sinkhorn_step(kernel, scaling, r, c)
                updates += 2 * n
                state = init_state(kernel, scaling, r, c, epoch=updates)
            elif algo == "greenkhorn":
                greenkhorn_step(kernel, scaling, state, r, c)
                updates = state.epoch
            elif algo == "stochastic":
                stochastic_step(kernel, scaling, state, r, c, config.psi, rng)
                updates = state.epoch
            else:
                d = min(config.block_size, budget - updates)
                block_step(kernel, scaling, state, r, c, config, rng, block_size=d)
                updates = state.epoch
            if algo != "sinkhorn":
                maybe_resync(state, kernel, scaling, r, c, resync_every)
            dist = dist_l1(state, r, c)
            converged = dist < eps
            if updates // every > before // every:
                record(updates, dist)
    except NumericalError as exc:
        exc.update = updates
        raise

    if trace.records[-1].update_count != updates:
        record(updates, dist)
    return SolveResult(
        scaling=scaling,
        updates_used=updates,
        converged=bool(converged),
        final_dist=float(dist),
        trace=trace,
        state=state,
    )

