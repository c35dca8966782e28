"""Regularized semi-Newton methods for difference programs.

Minimizes ``phi = g - h`` with smooth ``g`` and prox-regular ``h`` by
regularized generalized-Newton directions and Armijo backtracking. Includes
the forward-backward envelope reduction of ``f + psi``, a projected-like
Newton method for constrained problems, DCA/BDCA baselines, instance
generators, rate diagnostics and a batch harness.
"""
__version__ = "0.1.0"

from .core import (DifferenceOracle, IterationRecord, Status, Trace, eval_phi, subgradient,
                   validate_oracle)
from .exceptions import (ConfigError, DirectionFailure, InsufficientData, KeyMismatch,
                         LinesearchFailure, NonFiniteValue, OracleError, ProxUndefined,
                         RCSNError, SingularSystem, SubproblemFailure, UnknownFixture)
from .solver import (AdaptiveNormRho, ConstantRho, DecreasingRho, SolverConfig, backtrack,
                     descent_certificate, escalate_rho, run, solve_direction)
from .stepsize import ConstantStep, SelfAdaptiveStep

__all__ = [
    "__version__",
    "DifferenceOracle", "IterationRecord", "Status", "Trace", "eval_phi", "subgradient",
    "validate_oracle",
    "ConfigError", "DirectionFailure", "InsufficientData", "KeyMismatch", "LinesearchFailure",
    "NonFiniteValue", "OracleError", "ProxUndefined", "RCSNError", "SingularSystem",
    "SubproblemFailure", "UnknownFixture",
    "AdaptiveNormRho", "ConstantRho", "DecreasingRho", "SolverConfig", "backtrack",
    "descent_certificate", "escalate_rho", "run", "solve_direction",
    "ConstantStep", "SelfAdaptiveStep",
]
