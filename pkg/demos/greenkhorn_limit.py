"""How sharp does the selection distribution have to be before the stochastic method acts greedily?

Polynomial weights h**alpha and softmax weights exp(h / T) put more mass on
the largest violation as alpha grows or T shrinks. The first part prints
how much mass lands on the argmax for a fixed violation vector; the second
runs the solver and compares its distance after a fixed budget with
Greenkhorn's. The softmax temperature is on the absolute scale of the
violations, so once they shrink well below T the distribution flattens
towards uniform; polynomial weights are scale free and do not.

    python demos/greenkhorn_limit.py
"""

import numpy as np

from otscale import Histogram, ProbabilityFunction, SolverConfig, evaluate_psi, make_kernel, solve

h = np.array([0.30, 0.27, 0.10, 0.05, 0.0, 0.01])
print("mass on the argmax of", h)
for alpha in (1, 5, 20, 50, 200):
    p = evaluate_psi(ProbabilityFunction.polynomial(alpha), h)
    print(f"  poly:{alpha:<6} {p[0]:.4f}")
for temp in (0.1, 0.01, 0.003):
    p = evaluate_psi(ProbabilityFunction.softmax(temp), h)
    print(f"  softmax:{temp:<5} {p[0]:.4f}")

n = 64
rng = np.random.default_rng(1)
kernel = make_kernel(rng.random((n, n)), 20.0)
r = Histogram.from_mass(1 - rng.random(n))
c = Histogram.from_mass(1 - rng.random(n))
budget = 30 * n
print(f"\nmedian dist after {budget} updates over 10 seeds (n = {n}, lambda = 20)")
for psi in [None, "uniform", "poly:1", "poly:5", "poly:50", "softmax:0.001"]:
    algo = "greenkhorn" if psi is None else "stochastic"
    dists = [
        solve(kernel, r, c, SolverConfig(algo, psi=psi, epsilon=1e-14, max_updates=budget, seed=s)).final_dist
        for s in range(10 if psi else 1)
    ]
    label = "greenkhorn" if psi is None else f"stochastic[{psi}]"
    print(f"  {label:<26}{np.median(dists):.3e}")
