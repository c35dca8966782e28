"""Steady states of a synthetic reaction network.

The squared residual ||S exp(w + K^T x)||^2 is split as a difference of two
convex functions. Two regularization schedules are compared: a fixed rho and
a rho that starts at ||w_0|| and drops tenfold every 50 iterations. The
decreasing schedule gets much further, yet the tail is only linear: the Newton
matrix uses the Hessian of g alone, which differs from the Hessian of phi at
the solution.
"""
import numpy as np

from rcsn import ConstantRho, DecreasingRho, SelfAdaptiveStep, SolverConfig, run
from rcsn.problems import biochem_oracles, gen_biochem

model, x0 = gen_biochem(5)
oracle = biochem_oracles(model)
print(f"network with {model.m} species and {model.n} reversible reactions")

for label, strategy in [("constant rho=1e3", ConstantRho(1e3)),
                        ("decreasing rho", DecreasingRho(10.0, 50))]:
    config = SolverConfig(beta=0.2, sigma=0.2, t_min=1e-8, rho_strategy=strategy, max_iters=500)
    trace = run(oracle, x0, config, SelfAdaptiveStep(2.0, 1e-8))
    phis = trace.phis
    marks = ", ".join(f"k={k}: {phis[k]:.2e}" for k in (0, 50, 100, 200, len(phis) - 1)
                      if k < len(phis))
    print(f"{label:17s} {marks} ({trace.status})")
    print(f"{'':17s} max |x| along the run: {max(np.abs(r.x).max() for r in trace.records):.1f}")
