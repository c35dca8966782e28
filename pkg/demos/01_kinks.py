"""Newton steps on a piecewise-linear difference.

phi(x) = ||x||^2/2 - sum_i (|x_i| + |1 - |x_i||) has global minima on
{-2, 0, 2}^n and spurious critical points at +-1. From random starts the
semi-Newton method with unit steps and no regularization lands on a global
minimizer, usually within one or two iterations.
"""
import numpy as np

from rcsn import ConstantRho, ConstantStep, SolverConfig, run
from rcsn.problems import fixture

rng = np.random.default_rng(0)
oracle = fixture("abs_kinks", n=3)
config = SolverConfig(rho_strategy=ConstantRho(0.0), sigma=0.25, t_min=1.0)

for x0 in rng.uniform(-5, 5, size=(5, 3)):
    trace = run(oracle, x0, config, ConstantStep(1.0))
    print(f"start {np.round(x0, 2)} -> {trace.final_x} "
          f"phi={trace.final_phi:+.3f} after {trace.iterations} step(s), {trace.status}")

# a start on a spurious critical point is still left along a descent direction
trace = run(oracle, np.ones(3), config, ConstantStep(1.0))
print(f"start at (1, 1, 1) -> {trace.final_x} ({trace.status})")
