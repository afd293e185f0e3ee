import math

import numpy as np
import pytest

from conftest import random_instance
from otscale import (
    DegenerateError,
    DimensionError,
    Histogram,
    KernelMatrix,
    ProbabilityFunction,
    ScalingPair,
    SolverConfig,
    block_step,
    dist_l1,
    dual_objective,
    evaluate_psi,
    greenkhorn_step,
    init_state,
    make_kernel,
    make_rng,
    sinkhorn_step,
    solve,
    stochastic_step,
)
from otscale.solvers import ConvergenceTrace
from otscale.violations import apply_index_update

ALL = [
    SolverConfig("sinkhorn"),
    SolverConfig("greenkhorn"),
    SolverConfig("stochastic", psi="uniform"),
    SolverConfig("stochastic", psi="poly:1"),
    SolverConfig("stochastic", psi="softmax:1"),
    SolverConfig("block-greedy", block_size=4),
    SolverConfig("block-stochastic", block_size=4),
]


def with_budget(cfg, **kw):
    fields = dict(
        algorithm=cfg.algorithm, epsilon=cfg.epsilon, max_updates=cfg.max_updates, psi=cfg.psi,
        block_size=cfg.block_size, seed=cfg.seed, trace_every=cfg.trace_every, resync_every=cfg.resync_every,
    )
    fields.update(kw)
    return SolverConfig(**fields)


def optimal_dual(kernel, r, c, iters=5000):
    s = ScalingPair.ones(kernel.n)
    for _ in range(iters):
        s = sinkhorn_step(kernel, s, r, c)
    return dual_objective(kernel, s, r, c)


class TestConfig:
    def test_defaults(self):
        cfg = SolverConfig("stochastic")
        assert cfg.psi == ProbabilityFunction.polynomial(1)
        assert cfg.label == "stochastic[poly:1]"
        assert SolverConfig("block-greedy", block_size=3).label == "block-greedy-d3"
        assert SolverConfig("greenkhorn").psi is None

    @pytest.mark.parametrize(
        "kw",
        [dict(algorithm="newton"), dict(epsilon=0.0), dict(max_updates=0), dict(block_size=0), dict(trace_every=0)],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


class TestTrace:
    def test_strictly_increasing(self):
        t = ConvergenceTrace()
        t.append(0, 1.0, 2.0, 5)
        with pytest.raises(ValueError):
            t.append(0, 1.0, 2.0, 6)

    def test_value_at_is_as_of(self):
        t = ConvergenceTrace()
        t.append(0, 3.0, 0.0, 0)
        t.append(10, 2.0, 0.0, 0)
        assert t.value_at(9) == 3.0
        assert t.value_at(10) == 2.0
        assert t.value_at(99) == 2.0
        with pytest.raises(ValueError):
            t.value_at(-1)


class TestSinkhornStep:
    def test_identity_kernel(self):
        k = KernelMatrix(np.array([[1.0, 1e-300], [1e-300, 1.0]]))
        r = c = Histogram(np.array([0.5, 0.5]))
        s = sinkhorn_step(k, ScalingPair.ones(2), r, c)
        np.testing.assert_allclose(s.u, [0.5, 0.5], rtol=1e-15)
        np.testing.assert_allclose(s.v, [1.0, 1.0], rtol=1e-15)
        assert dist_l1(init_state(k, s, r, c), r, c) == pytest.approx(0.0, abs=1e-15)

    def test_fixed_point(self):
        kernel, r, c = random_instance(6, 4)
        s = ScalingPair.ones(6)
        for _ in range(2000):
            s = sinkhorn_step(kernel, s, r, c)
        t = sinkhorn_step(kernel, s, r, c)
        np.testing.assert_allclose(t.u, s.u, rtol=1e-12)
        np.testing.assert_allclose(t.v, s.v, rtol=1e-12)

    def test_rows_match_after_u_pass(self):
        kernel, r, c = random_instance(5, 8)
        s = ScalingPair(np.ones(5), np.linspace(1, 2, 5))
        u = r.weights / kernel.matvec(s.v)
        st_ = init_state(kernel, ScalingPair(u, s.v), r, c)
        np.testing.assert_allclose(st_.row_violations, 0.0, atol=1e-15)


class TestGreenkhorn:
    def test_selects_worst_row(self):
        kernel, r, c = random_instance(4, 0)
        s = ScalingPair.ones(4)
        st_ = init_state(kernel, s, r, c)
        worst = int(np.argmax(st_.violations))
        greenkhorn_step(kernel, s, st_, r, c)
        assert st_.violations[worst] == 0.0

    def test_degenerate(self):
        kernel, r, c = random_instance(4, 0)
        s = ScalingPair.ones(4)
        st_ = init_state(kernel, s, r, c)
        st_.violations[:] = 0.0
        with pytest.raises(DegenerateError):
            greenkhorn_step(kernel, s, st_, r, c)

    def test_dual_decrease_identity(self):
        kernel, r, c = random_instance(6, 21)
        s = ScalingPair.ones(6)
        st_ = init_state(kernel, s, r, c)
        f = dual_objective(kernel, s, r, c)
        for _ in range(50):
            expected = float(np.max(st_.violations))
            greenkhorn_step(kernel, s, st_, r, c)
            f_new = dual_objective(kernel, s, r, c)
            assert f - f_new == pytest.approx(expected, abs=1e-9)
            assert f_new <= f
            f = f_new


class TestStochastic:
    def test_greedy_psi_is_greenkhorn(self):
        kernel, r, c = random_instance(6, 5)
        s1, s2 = ScalingPair.ones(6), ScalingPair.ones(6)
        a, b = init_state(kernel, s1, r, c), init_state(kernel, s2, r, c)
        rng = make_rng(0)
        for _ in range(40):
            greenkhorn_step(kernel, s1, a, r, c)
            stochastic_step(kernel, s2, b, r, c, ProbabilityFunction.greedy(), rng)
        np.testing.assert_array_equal(s1.u, s2.u)
        np.testing.assert_array_equal(s1.v, s2.v)

    def test_matched_coordinate_is_noop(self):
        kernel, r, c = random_instance(4, 2)
        s = ScalingPair.ones(4)
        st_ = init_state(kernel, s, r, c)
        greenkhorn_step(kernel, s, st_, r, c)
        i = int(np.flatnonzero(st_.violations == 0)[0])
        before = s.copy()
        apply_index_update(st_, kernel, s, i, r, c)
        np.testing.assert_allclose(s.u, before.u, rtol=1e-15)
        np.testing.assert_allclose(s.v, before.v, rtol=1e-15)

    def test_expected_decrease_monte_carlo(self):
        # E[f_k - f_{k+1}] = sum_i p_i rho_i, estimated from one frozen state
        kernel, r, c = random_instance(6, 13)
        s0 = ScalingPair.ones(6)
        st0 = init_state(kernel, s0, r, c)
        for _ in range(5):
            greenkhorn_step(kernel, s0, st0, r, c)
        psi = ProbabilityFunction.polynomial(1)
        p = evaluate_psi(psi, st0.violations)
        exact = float(np.dot(p, st0.violations))
        f0 = dual_objective(kernel, s0, r, c)
        rng = make_rng(99)
        total = 0.0
        for _ in range(10_000):
            s, st_ = s0.copy(), st0.copy()
            stochastic_step(kernel, s, st_, r, c, psi, rng)
            total += f0 - dual_objective(kernel, s, r, c)
        assert total / 10_000 == pytest.approx(exact, rel=0.02)


class TestBlock:
    @pytest.mark.parametrize("algo, psi", [("block-greedy", None), ("block-stochastic", "poly:1")])
    def test_d1_matches_single(self, algo, psi):
        kernel, r, c = random_instance(8, 6)
        single = "greenkhorn" if algo == "block-greedy" else "stochastic"
        a = solve(kernel, r, c, SolverConfig(single, psi=psi, epsilon=1e-9, max_updates=300, seed=4, trace_every=1))
        b = solve(kernel, r, c, SolverConfig(algo, psi=psi, epsilon=1e-9, max_updates=300, seed=4, trace_every=1))
        np.testing.assert_array_equal(a.scaling.u, b.scaling.u)
        np.testing.assert_array_equal(a.scaling.v, b.scaling.v)
        np.testing.assert_array_equal(a.trace.column("dist_l1"), b.trace.column("dist_l1"))

    def test_full_block_is_sinkhorn(self):
        kernel, r, c = random_instance(8, 6)
        s = ScalingPair.ones(8)
        st_ = init_state(kernel, s, r, c)
        cfg = SolverConfig("block-greedy", block_size=16)
        block_step(kernel, s, st_, r, c, cfg, make_rng(0))
        ref = sinkhorn_step(kernel, ScalingPair.ones(8), r, c)
        np.testing.assert_allclose(s.u, ref.u, rtol=1e-10)
        np.testing.assert_allclose(s.v, ref.v, rtol=1e-10)

    def test_block_size_comparable(self):
        # d = 4 against d = 1 at equal update counts, median over 10 seeds
        rng = np.random.default_rng(77)
        cost = rng.random((16, 16))
        r = Histogram.from_mass(1 - rng.random(16))
        c = Histogram.from_mass(1 - rng.random(16))
        kernel = make_kernel(cost, 10.0)
        budget = 20 * 16
        finals = {1: [], 4: []}
        for d in finals:
            for seed in range(10):
                cfg = SolverConfig("block-stochastic", psi="poly:1", block_size=d, epsilon=1e-12,
                                   max_updates=budget, seed=seed)
                finals[d].append(solve(kernel, r, c, cfg).final_dist)
        assert np.median(finals[4]) <= 2 * np.median(finals[1])


class TestSolve:
    @pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.label)
    def test_converges_and_accounts(self, cfg):
        kernel, r, c = random_instance(12, 3)
        res = solve(kernel, r, c, with_budget(cfg, epsilon=1e-3, max_updates=50_000))
        assert res.converged
        assert res.final_dist < 1e-3
        assert res.updates_used <= 50_000
        counts = res.trace.column("update_count")
        assert counts[0] == 0 and counts[-1] == res.updates_used
        assert np.all(np.diff(counts) > 0)
        assert np.all(np.diff(res.trace.column("dual_value")) <= 1e-9)
        # the reported distance agrees with a dense recomputation
        plan = res.scaling.u[:, None] * kernel.entries * res.scaling.v
        dense = np.abs(plan.sum(1) - r.weights).sum() + np.abs(plan.sum(0) - c.weights).sum()
        assert res.final_dist == pytest.approx(dense, rel=1e-6, abs=1e-12)

    @pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.label)
    def test_deterministic(self, cfg):
        kernel, r, c = random_instance(10, 9)
        cfg = with_budget(cfg, epsilon=1e-6, max_updates=2000, seed=31)
        a, b = solve(kernel, r, c, cfg), solve(kernel, r, c, cfg)
        np.testing.assert_array_equal(a.trace.column("dist_l1"), b.trace.column("dist_l1"))
        np.testing.assert_array_equal(a.trace.column("dual_value"), b.trace.column("dual_value"))
        np.testing.assert_array_equal(a.scaling.u, b.scaling.u)

    def test_already_feasible(self):
        a = np.array([[0.25, 0.25], [0.25, 0.25]])
        r = c = Histogram(np.array([0.5, 0.5]))
        res = solve(KernelMatrix(a), r, c, SolverConfig("greenkhorn"))
        assert res.converged and res.updates_used == 0 and res.final_dist == 0.0
        assert len(res.trace) == 1

    def test_budget_exhaustion(self):
        kernel, r, c = random_instance(10, 1, lam=5.0)
        res = solve(kernel, r, c, SolverConfig("greenkhorn", epsilon=1e-15, max_updates=37, trace_every=10))
        assert not res.converged
        assert res.updates_used == 37
        assert list(res.trace.column("update_count")) == [0, 10, 20, 30, 37]

    def test_sinkhorn_budget_in_whole_iterations(self):
        kernel, r, c = random_instance(10, 1, lam=5.0)
        res = solve(kernel, r, c, SolverConfig("sinkhorn", epsilon=1e-15, max_updates=75))
        assert res.updates_used == 60
        assert list(res.trace.column("update_count")) == [0, 20, 40, 60]

    def test_block_budget_clipped(self):
        kernel, r, c = random_instance(10, 1, lam=5.0)
        res = solve(kernel, r, c, SolverConfig("block-greedy", block_size=8, epsilon=1e-15, max_updates=30))
        assert res.updates_used == 30

    def test_dimension_mismatch(self):
        kernel, r, _ = random_instance(5, 0)
        with pytest.raises(DimensionError):
            solve(kernel, r, Histogram.uniform(4), SolverConfig())

    def test_resync_disabled_matches(self):
        kernel, r, c = random_instance(10, 2)
        a = solve(kernel, r, c, SolverConfig("greenkhorn", epsilon=1e-8, max_updates=500, resync_every=0))
        b = solve(kernel, r, c, SolverConfig("greenkhorn", epsilon=1e-8, max_updates=500))
        np.testing.assert_allclose(a.scaling.u, b.scaling.u, rtol=1e-9)


class TestDualBounds:
    def test_gap_bound_normalized_kernel(self):
        # with total mass 1, f(0, 0) - f(x_k, y_k) <= log(s / l) for every iterate
        kernel, r, c = random_instance(12, 17, lam=3.0)
        kernel = KernelMatrix(kernel.entries / kernel.total_mass)
        bound = kernel.log_condition
        f0 = dual_objective(kernel, ScalingPair.ones(12), r, c)
        assert f0 == pytest.approx(1.0)
        for cfg in ALL:
            res = solve(kernel, r, c, with_budget(cfg, epsilon=1e-10, max_updates=5000, trace_every=1))
            assert np.all(f0 - res.trace.column("dual_value") <= bound + 1e-9)
        assert f0 - optimal_dual(kernel, r, c) <= bound

    def test_unnormalized_kernel_bound(self):
        # scaling A by s shifts the dual by log s, so the gap picks up s - 1 - log s
        kernel, r, c = random_instance(12, 17, lam=3.0)
        s = kernel.total_mass
        bound = kernel.log_condition + s - 1 - math.log(s)
        gap = kernel.total_mass - optimal_dual(kernel, r, c)
        assert gap <= bound
        # the uncorrected bound does not hold once s is far from 1
        assert gap > kernel.log_condition
