"""DCA and boosted DCA reference solvers.

A :class:`DCSplit` describes ``phi = g - h`` with convex ``g`` and ``h``
through a subgradient selection of ``h`` and a solver for the convex
subproblem ``argmin_x g(x) - <v, x>``.
"""
from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import IterationRecord, Status, Trace, as_point
from .envelope import CompositeProblem
from .exceptions import NonFiniteValue, SubproblemFailure
from .prox import project_ball
from .stepsize import SelfAdaptiveStep

__all__ = [
    "DCSplit",
    "relative_change",
    "dca_run",
    "bdca_run",
    "plain_trust_region_split",
    "regularize_split",
    "envelope_quadratic_split",
    "newton_subproblem_solver",
    "oracle_split",
]


@dataclass
class DCSplit:
    """Convex-convex decomposition used by DCA.

    Parameters
    ----------
    phi : callable
        Objective ``g - h``.
    h_subgrad : callable
        Subgradient selection of ``h``.
    argmin : callable, optional
        ``v -> argmin g(x) - <v, x>``; may take a warm start as second
        argument when ``warm_start`` is true.
    residual : callable, optional
        ``(x, v) -> ||first-order residual||`` of the subproblem.
    rho : float
        Regularization added to both parts (reported in traces).
    """

    phi: Callable
    h_subgrad: Callable
    argmin: Optional[Callable] = None
    residual: Optional[Callable] = None
    rho: float = 0.0
    warm_start: bool = False
    name: str = ""

    def solve(self, v, x):
        if self.argmin is None:
            raise SubproblemFailure(f"split {self.name!r} has no subproblem solver")
        return self.argmin(v, x) if self.warm_start else self.argmin(v)


def relative_change(x_new, x):
    """``||x_new - x|| / ||x||`` when ``||x|| > 1``, else ``||x_new - x||``."""
    step = float(np.linalg.norm(x_new - x))
    nx = float(np.linalg.norm(x))
    return step / nx if nx > 1 else step


def _checked(value, what):
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteValue(f"{what} is not finite")
    return value


def dca_run(split, x0, stop_tol=1e-4, max_iters=100000, phi_target=None):
    """Classical DCA ``x_{k+1} = argmin g - <v_k, .>``, ``v_k`` in ``dh(x_k)``.

    Stops with status ``Converged`` once the relative change drops to
    ``stop_tol`` and with ``TargetReached`` once ``phi <= phi_target``.
    Records store ``NaN`` in ``w_norm`` (no gradient of ``phi`` is used).
    """
    t0 = time.perf_counter_ns()
    x = as_point(x0)
    trace = Trace()
    phi = _checked(split.phi(x), "phi")
    k = 0
    try:
        while True:
            if phi_target is not None and phi <= phi_target:
                trace.status = Status.TARGET_REACHED
                break
            if k >= max_iters:
                trace.status = Status.MAX_ITERATIONS
                break
            v = split.h_subgrad(x)
            y = np.asarray(split.solve(v, x), dtype=float)
            phi_y = _checked(split.phi(y), "phi")
            er = relative_change(y, x)
            if not phi_y < phi:
                # DCA never increases phi; equality means no representable progress
                trace.status = Status.CONVERGED if er <= stop_tol else Status.NO_PROGRESS
                break
            trace.records.append(IterationRecord(k, x.copy(), phi, math.nan,
                                                 float(np.linalg.norm(y - x)), 1.0, split.rho, 0,
                                                 time.perf_counter_ns() - t0))
            x, phi = y, phi_y
            k += 1
            if er <= stop_tol:
                trace.status = Status.CONVERGED
                break
    except NonFiniteValue as exc:
        trace.status = Status.NON_FINITE
        trace.message = str(exc)
    except SubproblemFailure as exc:
        trace.status = Status.SUBPROBLEM_FAILURE
        trace.message = str(exc)
    trace.records.append(IterationRecord(k, x.copy(), phi, math.nan, 0.0, 0.0, split.rho, 0,
                                         time.perf_counter_ns() - t0))
    trace.final_x = x
    return trace


def bdca_run(split, x0, stop_tol=1e-4, max_iters=100000, sigma=0.2, beta=0.2,
             stepsize=None, tau_floor=1e-10, phi_target=None):
    """Boosted DCA: a DCA point ``y`` followed by a line search along ``y - x``.

    The extra step ``y + tau d`` is accepted when
    ``phi(y + tau d) <= phi(y) - sigma tau^2 ||d||^2``; trials shrink by
    ``beta`` and ``tau = 0`` (the plain DCA step) is used once they drop
    below ``tau_floor``. Trial stepsizes come from ``stepsize``
    (self-adaptive by default).
    """
    stepsize = SelfAdaptiveStep(gamma=4.0, t_min=1e-6) if stepsize is None else copy.deepcopy(stepsize)
    stepsize.reset()
    t0 = time.perf_counter_ns()
    x = as_point(x0)
    trace = Trace()
    phi = _checked(split.phi(x), "phi")
    k = 0
    try:
        while True:
            if phi_target is not None and phi <= phi_target:
                trace.status = Status.TARGET_REACHED
                break
            if k >= max_iters:
                trace.status = Status.MAX_ITERATIONS
                break
            v = split.h_subgrad(x)
            y = np.asarray(split.solve(v, x), dtype=float)
            phi_y = _checked(split.phi(y), "phi")
            d = y - x
            dd = float(d @ d)
            tau_bar = stepsize.next_trial()
            tau, count, phi_new = tau_bar, 0, phi_y
            while dd > 0:
                try:
                    trial = split.phi(y + tau * d)
                except NonFiniteValue:
                    trial = math.inf
                if trial <= phi_y - sigma * tau * tau * dd:
                    phi_new = trial
                    break
                tau *= beta
                count += 1
                if tau < tau_floor:
                    tau, phi_new = 0.0, phi_y
                    break
            else:
                tau = 0.0
            stepsize.update(tau_bar, tau)
            x_new = y + tau * d
            er = relative_change(x_new, x)
            if not phi_new < phi:
                trace.status = Status.CONVERGED if er <= stop_tol else Status.NO_PROGRESS
                break
            trace.records.append(IterationRecord(k, x.copy(), phi, math.nan, math.sqrt(dd),
                                                 tau, split.rho, count,
                                                 time.perf_counter_ns() - t0))
            x, phi = x_new, phi_new
            k += 1
            if er <= stop_tol:
                trace.status = Status.CONVERGED
                break
    except NonFiniteValue as exc:
        trace.status = Status.NON_FINITE
        trace.message = str(exc)
    except SubproblemFailure as exc:
        trace.status = Status.SUBPROBLEM_FAILURE
        trace.message = str(exc)
    trace.records.append(IterationRecord(k, x.copy(), phi, math.nan, 0.0, 0.0, split.rho, 0,
                                         time.perf_counter_ns() - t0))
    trace.final_x = x
    return trace


# ---------------------------------------------------------------------------
# splits for quadratic problems


def plain_trust_region_split(Q, b, r, rho=None):
    """``g = rho ||x||^2/2 + b^T x + indicator(B_r)``, ``h = x^T (rho I - Q) x / 2``.

    ``rho`` defaults to ``||Q||_2``. The subproblem solution is
    ``P_B((v - b) / rho)``.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    rho = float(np.linalg.norm(Q, 2)) if rho is None else float(rho)
    M = rho * np.eye(b.size) - Q

    def argmin(v):
        return project_ball((v - b) / rho, 0.0, r)

    def residual(x, v):
        # x must be the projection of (v - b)/rho
        return float(np.linalg.norm(x - argmin(v)))

    return DCSplit(phi=lambda x: 0.5 * float(x @ Q @ x) + float(b @ x),
                   h_subgrad=lambda x: M @ x, argmin=argmin, residual=residual, rho=rho,
                   name="trust_region_plain")


def envelope_quadratic_split(problem: CompositeProblem, rho):
    """Convex split of the envelope of ``x^T Q x/2 + b^T x + psi``.

    ``g = x^T (Q + (rho + 1/lam) I) x / 2 + b^T x`` and
    ``h = x^T (2Q + rho I) x / 2 + b^T x + A((I - lam Q) x - lam b)``.
    The subproblem is a positive-definite linear solve, factored once.
    """
    lam = problem.lam
    n = problem.dim
    Q = np.asarray(problem.f_hess(np.zeros(n)), dtype=float)
    b = problem.f_grad(np.zeros(n))
    eye = np.eye(n)
    G = Q + (rho + 1.0 / lam) * eye
    factor = scipy.linalg.cho_factor(G)
    H = 2 * Q + rho * eye
    T = eye - lam * Q
    psi = problem.psi

    def h_subgrad(x):
        y = T @ x - lam * b
        return H @ x + b + T @ psi.prox(y, lam) / lam

    def phi(x):
        y = T @ x - lam * b
        p = psi.prox(y, lam)
        # g - h simplified: x^T (I/lam - Q) x / 2 - A(y)
        asp = (float(p @ y) - 0.5 * float(p @ p)) / lam - psi.value(p)
        return 0.5 * float(x @ (x / lam - Q @ x)) - asp

    def argmin(v):
        return scipy.linalg.cho_solve(factor, v - b)

    def residual(x, v):
        return float(np.linalg.norm(G @ x + b - v))

    return DCSplit(phi=phi, h_subgrad=h_subgrad, argmin=argmin, residual=residual, rho=float(rho),
                   name="envelope_quadratic")


def regularize_split(Q, b, lam, mode="dca", psi=None):
    """Envelope split with ``rho = max(0, -2 lambda_min(Q))`` (``mode="dca"``)
    or that value plus 0.1 (``mode="bdca"``, so ``h`` is strongly convex).

    Parameters
    ----------
    Q, b : array_like
        Quadratic data.
    lam : float or CompositeProblem
        Envelope parameter, or a ready composite problem (then ``Q``, ``b``
        and ``psi`` are taken from it when passed as ``None``).
    psi : ProxFriendly, optional
        Defaults to the zero function.
    """
    from .envelope import ZeroFunction, quadratic_problem

    if isinstance(lam, CompositeProblem):
        problem = lam
        Q = problem.f_hess(np.zeros(problem.dim))
    else:
        problem = quadratic_problem(Q, b, psi if psi is not None else ZeroFunction(), lam=lam)
    lam_min = float(np.linalg.eigvalsh(np.asarray(Q, dtype=float))[0])
    rho = max(0.0, -2.0 * lam_min)
    if mode == "bdca":
        rho += 0.1
    elif mode != "dca":
        raise ValueError(f"unknown mode {mode!r}")
    return envelope_quadratic_split(problem, rho)


# ---------------------------------------------------------------------------
# smooth splits solved by an inner Newton loop


def newton_subproblem_solver(g_value, g_grad, g_hess, tol=1e-8, max_iters=100,
                             armijo=1e-4, backtrack=0.5):
    """Damped Newton solver for ``min g(x) - <v, x>`` with smooth convex ``g``.

    Stops when ``||grad g(x) - v|| <= tol (1 + ||v||)``. A small Levenberg
    shift is added when the Hessian is not numerically positive definite.

    Returns
    -------
    callable
        ``(v, x_start) -> x``.
    """
    def solve(v, x):
        x = np.array(x, dtype=float)
        scale = 1.0 + float(np.linalg.norm(v))
        val = g_value(x) - float(v @ x)
        for _ in range(max_iters):
            grad = g_grad(x) - v
            if np.linalg.norm(grad) <= tol * scale:
                return x
            H = g_hess(x)
            shift = 0.0
            while True:
                try:
                    c = scipy.linalg.cho_factor(H + shift * np.eye(x.size))
                    break
                except np.linalg.LinAlgError:
                    shift = max(2 * shift, 1e-12 * (1 + np.abs(H).max()))
            d = -scipy.linalg.cho_solve(c, grad)
            slope = float(grad @ d)
            t = 1.0
            while True:
                with np.errstate(over="ignore", invalid="ignore"):
                    trial = g_value(x + t * d) - float(v @ (x + t * d))
                if math.isfinite(trial) and trial < val and trial <= val + armijo * t * slope:
                    break
                t *= backtrack
                if t < 1e-16:
                    # no strict decrease representable: accept current point
                    return x
            x = x + t * d
            val = trial
        raise SubproblemFailure("inner Newton loop did not converge")

    return solve


def oracle_split(oracle, tol=1e-8):
    """DCA split of a smooth difference oracle with convex ``g`` and ``h``.

    Subproblems are solved by :func:`newton_subproblem_solver` warm-started
    at the current iterate.
    """
    from .core import eval_phi

    if oracle.h_subgrad is None:
        raise SubproblemFailure("oracle has no subgradient selection of h")
    solver = newton_subproblem_solver(oracle.g_value, oracle.g_grad, oracle.g_hess_element, tol=tol)

    def residual(x, v):
        return float(np.linalg.norm(oracle.g_grad(x) - v))

    return DCSplit(phi=lambda x: eval_phi(oracle, x), h_subgrad=oracle.h_subgrad, argmin=solver,
                   residual=residual, warm_start=True, name=oracle.name)
