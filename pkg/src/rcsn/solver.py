"""Regularized semi-Newton method with Armijo backtracking.

Each iteration solves ``(A + rho I) d = -w`` with ``A`` a generalized Hessian
element of ``g`` and ``w`` an element of the subdifferential of ``phi``,
enlarges ``rho`` until ``d`` passes the descent certificate
``<w, d> <= -zeta ||d||^2`` and then backtracks from a trial stepsize.
"""
from __future__ import annotations

import copy
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import (DifferenceOracle, IterationRecord, Status, Trace, as_point,
                   eval_phi, hessian_element, subgradient)
from .exceptions import (ConfigError, DirectionFailure, LinesearchFailure,
                         NonFiniteValue, SingularSystem)
from .stepsize import SelfAdaptiveStep

__all__ = [
    "ConstantRho",
    "DecreasingRho",
    "AdaptiveNormRho",
    "SolverConfig",
    "solve_direction",
    "descent_certificate",
    "escalate_rho",
    "backtrack",
    "run",
]


@dataclass(frozen=True)
class ConstantRho:
    """Fixed regularization ``rho``."""

    rho: float = 0.0

    def value(self, k, w_norm, w0_norm, zeta):
        return self.rho

    def certificate_zeta(self, w_norm, zeta):
        return zeta


@dataclass(frozen=True)
class DecreasingRho:
    """``rho_k = ||w_0|| / divisor**floor(k / period) + zeta``."""

    divisor: float = 10.0
    period: int = 50

    def value(self, k, w_norm, w0_norm, zeta):
        return w0_norm / self.divisor ** (k // self.period) + zeta

    def certificate_zeta(self, w_norm, zeta):
        return zeta


@dataclass(frozen=True)
class AdaptiveNormRho:
    """``rho_k = c ||w_k||`` plus ``zeta``.

    With ``varying_zeta`` the additive ``zeta`` is dropped and the descent
    certificate uses ``c ||w_k||`` in its place.
    """

    c: float = 5.0
    varying_zeta: bool = False

    def value(self, k, w_norm, w0_norm, zeta):
        if self.varying_zeta:
            return self.c * w_norm
        return self.c * w_norm + zeta

    def certificate_zeta(self, w_norm, zeta):
        return self.c * w_norm if self.varying_zeta else zeta


@dataclass
class SolverConfig:
    """Tunables of the semi-Newton iteration.

    Parameters
    ----------
    beta : float
        Backtracking factor in (0, 1).
    sigma : float
        Armijo constant in (0, 1).
    zeta : float
        Descent certificate constant.
    t_min : float
        Lower bound on trial stepsizes.
    rho_max : float
        Cap on the regularization during escalation.
    rho_strategy : ConstantRho, DecreasingRho or AdaptiveNormRho
    grad_tol : float
        Stationarity threshold on ``||w||``.
    max_iters : int
    tau_floor : float
        Line search aborts once the stepsize falls below this value.
    phi_target : float, optional
        Stop as soon as ``phi`` drops to this value.
    """

    beta: float = 0.5
    sigma: float = 0.2
    zeta: float = 1e-8
    t_min: float = 1e-8
    rho_max: float = 1e12
    rho_strategy: object = field(default_factory=ConstantRho)
    grad_tol: float = 1e-8
    max_iters: int = 1000
    tau_floor: float = 1e-14
    phi_target: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(0 < self.beta < 1, f"beta must lie in (0, 1), got {self.beta}")
        need(0 < self.sigma < 1, f"sigma must lie in (0, 1), got {self.sigma}")
        need(self.zeta > 0, f"zeta must be positive, got {self.zeta}")
        need(self.t_min > 0, f"t_min must be positive, got {self.t_min}")
        need(self.rho_max > 0, f"rho_max must be positive, got {self.rho_max}")
        need(self.grad_tol > 0, f"grad_tol must be positive, got {self.grad_tol}")
        need(int(self.max_iters) >= 1, f"max_iters must be at least 1, got {self.max_iters}")
        need(0 < self.tau_floor < self.t_min,
             f"tau_floor must lie in (0, t_min={self.t_min}), got {self.tau_floor}")


def solve_direction(hess_element, rho, w):
    """Solve ``(A + rho I) d = -w``.

    A symmetric indefinite (LDL^T) solve is tried first, then a general
    dense LU solve. The result must satisfy
    ``||(A + rho I) d + w|| <= 1e-10 ||w||``.

    Raises
    ------
    SingularSystem
        If both factorizations fail or the residual bound is not met.
    """
    A = np.asarray(hess_element, dtype=float)
    w = np.asarray(w, dtype=float)
    M = A + rho * np.eye(A.shape[0])
    wn = np.linalg.norm(w)
    for assume_a in ("sym", "gen"):
        try:
            with warnings.catch_warnings():
                # accuracy is judged by the residual test below
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                d = scipy.linalg.solve(M, -w, assume_a=assume_a, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if np.all(np.isfinite(d)) and np.linalg.norm(M @ d + w) <= 1e-10 * wn:
            return d
    raise SingularSystem(f"system with rho={rho:g} could not be solved accurately")


def descent_certificate(w, d, zeta):
    """True iff ``<w, d> <= -zeta ||d||^2``."""
    return bool(np.dot(w, d) <= -zeta * np.dot(d, d))


def escalate_rho(oracle, x, w, config, rho=None, zeta=None, hess=None):
    """Find ``rho`` whose direction passes the descent certificate.

    Starts at ``rho`` (the strategy value), then doubles from
    ``max(rho, zeta)`` with a cap at ``config.rho_max``. A singular or
    inaccurate solve counts as a failed attempt.

    Returns
    -------
    rho : float
    d : ndarray

    Raises
    ------
    DirectionFailure
        If the certificate still fails at ``rho_max``.
    """
    zeta = config.zeta if zeta is None else zeta
    A = hessian_element(oracle, x) if hess is None else hess
    rho = min(max(0.0 if rho is None else float(rho), 0.0), config.rho_max)
    while True:
        try:
            d = solve_direction(A, rho, w)
        except SingularSystem:
            d = None
        if d is not None and np.any(d) and descent_certificate(w, d, zeta):
            return rho, d
        if rho >= config.rho_max:
            raise DirectionFailure(f"no descent direction up to rho_max={config.rho_max:g}")
        rho = min(2.0 * max(rho, zeta), config.rho_max)


def _phi_function(objective):
    if isinstance(objective, DifferenceOracle):
        return lambda z: eval_phi(objective, z)
    return objective


def backtrack(objective, x, d, w, tau_bar, config, phi_x=None):
    """Armijo backtracking from ``tau_bar``.

    Parameters
    ----------
    objective : DifferenceOracle or callable
        Oracle or plain function returning ``phi``.
    phi_x : float, optional
        Cached ``phi(x)``.

    Returns
    -------
    tau : float
    backtracks : int
    phi_new : float
        Objective at ``x + tau d``.

    Notes
    -----
    A trial point where the objective is not finite fails the Armijo test
    and is shrunk like any other rejected trial.
    """
    phi = _phi_function(objective)
    phi_x = phi(x) if phi_x is None else phi_x
    slope = float(np.dot(w, d))
    tau = float(tau_bar)
    count = 0
    while True:
        try:
            trial = phi(x + tau * d)
        except NonFiniteValue:
            trial = math.inf
        if trial <= phi_x + config.sigma * tau * slope:
            return tau, count, trial
        tau *= config.beta
        count += 1
        if tau < config.tau_floor:
            raise LinesearchFailure(f"stepsize fell below tau_floor={config.tau_floor:g}")


def _record(k, x, phi, w_norm, d_norm, tau, rho, backtracks, t0):
    return IterationRecord(k, x.copy(), float(phi), float(w_norm), float(d_norm),
                           float(tau), float(rho), int(backtracks),
                           time.perf_counter_ns() - t0)


def run(oracle, x0, config=None, stepsize=None):
    """Minimize ``phi = g - h`` from ``x0``.

    Parameters
    ----------
    oracle : DifferenceOracle
    x0 : array_like
    config : SolverConfig, optional
    stepsize : ConstantStep or SelfAdaptiveStep, optional
        Copied before use, so the caller's object is never mutated.

    Returns
    -------
    Trace
        One record per visited point. Failures are reported through
        ``Trace.status`` rather than raised.
    """
    config = SolverConfig() if config is None else config
    stepsize = SelfAdaptiveStep(t_min=config.t_min) if stepsize is None else copy.deepcopy(stepsize)
    stepsize.reset()
    t0 = time.perf_counter_ns()
    trace = Trace()
    x = as_point(x0, oracle.dim)
    phi = eval_phi(oracle, x)
    w0_norm = None
    k = 0
    w_norm = math.nan
    try:
        while True:
            if config.phi_target is not None and phi <= config.phi_target:
                w_norm = math.nan
                trace.status = Status.TARGET_REACHED
                break
            w = subgradient(oracle, x)
            w_norm = float(np.linalg.norm(w))
            if w_norm <= config.grad_tol:
                trace.status = Status.STATIONARY
                break
            if k >= config.max_iters:
                trace.status = Status.MAX_ITERATIONS
                break
            if w0_norm is None:
                w0_norm = w_norm
            strategy = config.rho_strategy
            rho0 = strategy.value(k, w_norm, w0_norm, config.zeta)
            zeta_k = strategy.certificate_zeta(w_norm, config.zeta)
            try:
                rho, d = escalate_rho(oracle, x, w, config, rho=rho0, zeta=zeta_k)
            except DirectionFailure as exc:
                trace.status = Status.DIRECTION_FAILURE
                trace.message = str(exc)
                break
            tau_bar = max(stepsize.next_trial(), config.t_min)
            try:
                tau, nb, phi_new = backtrack(oracle, x, d, w, tau_bar, config, phi_x=phi)
            except LinesearchFailure as exc:
                trace.records.append(_record(k, x, phi, w_norm, np.linalg.norm(d), 0.0,
                                             rho, 0, t0))
                trace.status = Status.LINESEARCH_FAILURE
                trace.message = str(exc)
                trace.final_x = x
                return trace
            stepsize.update(tau_bar, tau)
            if not phi_new < phi:
                trace.status = Status.NO_PROGRESS
                break
            trace.records.append(_record(k, x, phi, w_norm, np.linalg.norm(d), tau, rho, nb, t0))
            x = x + tau * d
            phi = phi_new
            k += 1
    except NonFiniteValue as exc:
        trace.status = Status.NON_FINITE
        trace.message = str(exc)
    trace.records.append(_record(k, x, phi, w_norm, 0.0, 0.0, 0.0, 0, t0))
    trace.final_x = x
    return trace
