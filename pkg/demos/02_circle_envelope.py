"""Constrained quadratic on the unit circle through its envelope.

The forward-backward envelope turns ``x^T Q x/2 + indicator(circle)`` into a
difference of a smooth and a prox-regular function. The projected-like Newton
method and the generic semi-Newton solver on that difference produce the same
iterates. Convergence is slow here: the Newton matrix carries no curvature
from the circle, so the tail is first order.
"""
import numpy as np

from rcsn import ConstantRho, ConstantStep, SelfAdaptiveStep, SolverConfig, run
from rcsn.envelope import fbe_difference_oracle, fbe_value
from rcsn.problems import fixture
from rcsn.projected_newton import fixed_point_residual, pn_run, pn_solution

problem = fixture("circle_bilinear")
h = fbe_difference_oracle(problem).h_value
cert = h(np.array([-0.5, -0.5])) - 0.5 * h(np.array([-1.0, -1.0])) - 0.5 * h(np.zeros(2))
print(f"midpoint defect of h: {cert:.3f} (positive, so h is not convex)")

x0 = np.array([0.9, -0.2])
config = SolverConfig(beta=0.5, rho_strategy=ConstantRho(0.0), grad_tol=1e-12, max_iters=50)
a = pn_run(problem, x0, config, ConstantStep(1.0))
b = run(fbe_difference_oracle(problem), x0, config, ConstantStep(1.0))
gap = max(np.abs(ra.x - rb.x).max() for ra, rb in zip(a.records, b.records))
print(f"{len(a.records)} records each, largest iterate gap {gap:.1e}")

long = pn_run(problem, x0, SolverConfig(beta=0.2, t_min=1e-8), SelfAdaptiveStep(4.0, 1e-8))
print(f"longer run: {long.iterations} iterations, {long.status}")
a = long
sol = pn_solution(problem, a.final_x)
print(f"solution {np.round(sol, 6)}, |sol| = {np.linalg.norm(sol):.12f}, "
      f"objective {problem.f_value(sol):.6f}, envelope {fbe_value(problem, a.final_x):.6f}, "
      f"residual {fixed_point_residual(problem, a.final_x):.1e}")
