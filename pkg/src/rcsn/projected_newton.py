"""Projected-like Newton method for ``min f`` over a closed set ``C``.

The method is the semi-Newton iteration applied to the forward-backward
envelope of ``f + indicator_C`` with zero regularization: since
``lam < 1/L_f`` the matrix ``hess f + I/lam`` is positive definite and the
Newton direction is always a descent direction.
"""
from __future__ import annotations

import copy
import math
import time

import numpy as np

from .core import IterationRecord, Status, Trace, as_point
from .envelope import fbe_value, prox_point
from .exceptions import LinesearchFailure, NonFiniteValue, SingularSystem
from .solver import SolverConfig, backtrack, solve_direction
from .stepsize import SelfAdaptiveStep

__all__ = ["pn_step", "pn_run", "fixed_point_residual", "pn_solution"]


def _newton_matrix(problem, x):
    H = np.asarray(problem.f_hess(x), dtype=float)
    return 0.5 * (H + H.T) + np.eye(problem.dim) / problem.lam


def _step(problem, x):
    # returns w, d, ||r|| and ||hess f(x)||_2
    x = np.asarray(x, dtype=float)
    H = np.asarray(problem.f_hess(x), dtype=float)
    r = x - prox_point(problem, x)
    w = r / problem.lam - H @ r
    r_norm = float(np.linalg.norm(r))
    h_norm = float(np.linalg.norm(H, 2))
    if not np.any(w):
        return w, np.zeros_like(w), r_norm, h_norm
    try:
        d = solve_direction(_newton_matrix(problem, x), 0.0, w)
    except SingularSystem as exc:  # pragma: no cover - excluded by lam < 1/L_f
        raise AssertionError("Newton matrix is positive definite for lam < 1/L_f") from exc
    return w, d, r_norm, h_norm


def pn_step(problem, x):
    """Envelope subgradient ``w`` and Newton direction ``d`` at ``x``.

    ``w = (I/lam - hess f(x)) (x - P_C(x - lam grad f(x)))`` and ``d`` solves
    ``(hess f(x) + I/lam) d = -w``. When ``w = 0`` the direction is zero.
    """
    w, d, _, _ = _step(problem, x)
    return w, d


def fixed_point_residual(problem, x):
    """``||x - P_C(x - lam grad f(x))||``."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - prox_point(problem, x)))


def pn_solution(problem, x):
    """Feasible point ``P_C(x - lam grad f(x))`` associated with an iterate."""
    return prox_point(problem, np.asarray(x, dtype=float))


def pn_run(problem, x0, config=None, stepsize=None):
    """Run the projected-like Newton method.

    Parameters
    ----------
    problem : CompositeProblem
        ``psi`` should be an indicator; other prox-friendly ``psi`` work
        through the same formulas.
    x0 : array_like
    config : SolverConfig, optional
        ``rho_strategy`` and ``zeta`` are not used.
    stepsize : ConstantStep or SelfAdaptiveStep, optional

    Returns
    -------
    Trace
        ``Stationary`` requires ``||w|| <= grad_tol`` and a fixed-point
        residual at most ``grad_tol * lam * (1 + ||hess f(x)||)``.
        Records hold envelope values. ``final_x`` is the last iterate; use
        :func:`pn_solution` for the associated feasible point.
    """
    config = SolverConfig() if config is None else config
    stepsize = SelfAdaptiveStep(t_min=config.t_min) if stepsize is None else copy.deepcopy(stepsize)
    stepsize.reset()
    t0 = time.perf_counter_ns()

    def phi_fn(z):
        value = fbe_value(problem, z)
        if not math.isfinite(value):
            raise NonFiniteValue("envelope value is not finite")
        return value

    def record(k, x, phi, wn, dn, tau, nb):
        return IterationRecord(k, x.copy(), float(phi), float(wn), float(dn), float(tau),
                               0.0, int(nb), time.perf_counter_ns() - t0)

    trace = Trace()
    x = as_point(x0, problem.dim)
    phi = phi_fn(x)
    k = 0
    w_norm = math.nan
    try:
        while True:
            if config.phi_target is not None and phi <= config.phi_target:
                w_norm = math.nan
                trace.status = Status.TARGET_REACHED
                break
            w, d, r_norm, h_norm = _step(problem, x)
            w_norm = float(np.linalg.norm(w))
            # small w alone does not bound the fixed-point residual when lam ||H|| ~ 1
            if (w_norm <= config.grad_tol
                    and r_norm <= config.grad_tol * problem.lam * (1.0 + h_norm)):
                trace.status = Status.STATIONARY
                break
            if k >= config.max_iters:
                trace.status = Status.MAX_ITERATIONS
                break
            tau_bar = max(stepsize.next_trial(), config.t_min)
            try:
                tau, nb, phi_new = backtrack(phi_fn, x, d, w, tau_bar, config, phi_x=phi)
            except LinesearchFailure as exc:
                trace.records.append(record(k, x, phi, w_norm, np.linalg.norm(d), 0.0, 0))
                trace.status = Status.LINESEARCH_FAILURE
                trace.message = str(exc)
                trace.final_x = x
                return trace
            stepsize.update(tau_bar, tau)
            if not phi_new < phi:
                trace.status = Status.NO_PROGRESS
                break
            trace.records.append(record(k, x, phi, w_norm, np.linalg.norm(d), tau, nb))
            x = x + tau * d
            phi = phi_new
            k += 1
    except NonFiniteValue as exc:
        trace.status = Status.NON_FINITE
        trace.message = str(exc)
    trace.records.append(record(k, x, phi, w_norm, 0.0, 0.0, 0))
    trace.final_x = x
    return trace
