"""Oracle interfaces, iteration records and objective evaluation.

The objective handled everywhere in the package is a difference
``phi = g - h`` where ``g`` has a Lipschitz gradient and ``h`` is locally
Lipschitz. A solver only ever sees a :class:`DifferenceOracle`, a bundle of
pure callables evaluated at dense points.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import NonFiniteValue, OracleError

__all__ = [
    "Status",
    "DifferenceOracle",
    "IterationRecord",
    "Trace",
    "as_point",
    "eval_phi",
    "subgradient",
    "hessian_element",
    "SampleReport",
    "OracleReport",
    "validate_oracle",
    "check_neg_h_subgrad",
]


class Status(str, enum.Enum):
    """Terminal status of a solver run.

    ``Converged`` is used by the DCA-type baselines when their step-length
    stopping rule fires, ``TargetReached`` when a run stops on an objective
    target, ``NoProgress`` when an accepted step leaves ``phi`` unchanged in
    floating point, ``NonFiniteValue`` when an oracle produced NaN/Inf and
    ``SubproblemFailure`` when a DCA-type inner solve gave up.
    """

    STATIONARY = "Stationary"
    MAX_ITERATIONS = "MaxIterations"
    LINESEARCH_FAILURE = "LinesearchFailure"
    DIRECTION_FAILURE = "DirectionFailure"
    NON_FINITE = "NonFiniteValue"
    NO_PROGRESS = "NoProgress"
    CONVERGED = "Converged"
    TARGET_REACHED = "TargetReached"
    SUBPROBLEM_FAILURE = "SubproblemFailure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DifferenceOracle:
    """Callable bundle defining ``phi = g - h``.

    Parameters
    ----------
    dim : int
        Dimension of the iterate space.
    g_value, g_grad, g_hess_element : callable
        Value, gradient and one generalized Hessian element (dense symmetric
        matrix) of ``g``.
    h_value : callable
        Value of ``h``.
    neg_h_subgrad : callable
        One element of the limiting subdifferential of ``-h``. May return
        ``None`` to signal that no element is selectable.
    h_subgrad : callable, optional
        One element of the convex subdifferential of ``h`` (DCA baselines).
    xi_bound : float, optional
        A lower bound on the smallest eigenvalue of every Hessian element.
    name : str
        Label used in reports.
    """

    dim: int
    g_value: Callable[[np.ndarray], float]
    g_grad: Callable[[np.ndarray], np.ndarray]
    g_hess_element: Callable[[np.ndarray], np.ndarray]
    h_value: Callable[[np.ndarray], float]
    neg_h_subgrad: Callable[[np.ndarray], Optional[np.ndarray]]
    h_subgrad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    xi_bound: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if int(self.dim) <= 0:
            raise ValueError("dim must be positive")


@dataclass
class IterationRecord:
    """State of one visited iterate and the step taken from it.

    The last record of a run describes the returned point; its ``d_norm`` and
    ``tau`` are zero when no step was taken.
    """

    k: int
    x: np.ndarray
    phi: float
    w_norm: float
    d_norm: float
    tau: float
    rho: float
    backtracks: int
    wall_ns: int


@dataclass
class Trace:
    """Ordered iteration records plus terminal status and returned point."""

    records: list = field(default_factory=list)
    status: Status = Status.MAX_ITERATIONS
    final_x: Optional[np.ndarray] = None
    message: str = ""

    @property
    def phis(self):
        return np.array([r.phi for r in self.records])

    @property
    def xs(self):
        return np.array([r.x for r in self.records])

    @property
    def iterations(self):
        """Number of steps taken (records minus the returned point)."""
        return max(len(self.records) - 1, 0)

    @property
    def total_backtracks(self):
        return int(sum(r.backtracks for r in self.records))

    @property
    def final_phi(self):
        return self.records[-1].phi if self.records else float("nan")

    def is_monotone(self):
        """True when recorded ``phi`` values strictly decrease."""
        phi = self.phis
        return bool(np.all(np.diff(phi) < 0))


def as_point(x, dim=None):
    """Return ``x`` as a finite 1-D float array."""
    arr = np.array(x, dtype=float).reshape(-1)
    if dim is not None and arr.size != dim:
        raise ValueError(f"point has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("point has non-finite coordinates")
    return arr


def _finite_scalar(value, what):
    value = float(value)
    if not np.isfinite(value):
        raise NonFiniteValue(f"{what} is not finite")
    return value


def _finite_vector(value, what, dim):
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size != dim:
        raise OracleError(f"{what} has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{what} is not finite")
    return arr


def eval_phi(oracle, x):
    """Evaluate ``g(x) - h(x)``.

    Raises
    ------
    NonFiniteValue
        If either term is NaN or Inf.
    """
    x = as_point(x, oracle.dim)
    with np.errstate(over="ignore", invalid="ignore"):
        g = _finite_scalar(oracle.g_value(x), "g value")
        h = _finite_scalar(oracle.h_value(x), "h value")
    return g - h


def subgradient(oracle, x):
    """Return ``grad g(x) + v`` with ``v`` the oracle's element of the
    limiting subdifferential of ``-h`` at ``x``."""
    x = as_point(x, oracle.dim)
    v = oracle.neg_h_subgrad(x)
    if v is None:
        raise OracleError("no selectable element of the subdifferential of -h")
    grad = _finite_vector(oracle.g_grad(x), "g gradient", oracle.dim)
    return grad + _finite_vector(v, "-h subgradient", oracle.dim)


def hessian_element(oracle, x):
    """Dense Hessian element of ``g`` at ``x`` as a finite square matrix."""
    A = np.asarray(oracle.g_hess_element(x), dtype=float)
    if A.shape != (oracle.dim, oracle.dim):
        raise OracleError(f"Hessian element has shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteValue("Hessian element is not finite")
    return A


@dataclass
class SampleReport:
    """Validation figures at one sample point."""

    x: np.ndarray
    grad_residual: float
    hess_symmetry: float
    hess_fd_residual: float
    lambda_min: float
    xi_violation: bool


@dataclass
class OracleReport:
    """Per-sample validation results for one oracle."""

    samples: list
    tol: float

    @property
    def grad_ok(self):
        return all(s.grad_residual <= self.tol for s in self.samples)

    @property
    def symmetry_ok(self):
        return all(s.hess_symmetry <= 1e-12 for s in self.samples)

    @property
    def xi_ok(self):
        return not any(s.xi_violation for s in self.samples)

    @property
    def ok(self):
        return self.grad_ok and self.symmetry_ok and self.xi_ok


def validate_oracle(oracle, samples, tol=1e-5):
    """Check gradient, Hessian symmetry and lower-definiteness at samples.

    The gradient residual is the largest scaled deviation
    ``|g_i - fd_i| / (1 + |g_i|)`` from central differences with step
    ``1e-6 * (1 + ||x||)``. The Hessian residual compares the Hessian element
    to central differences of the gradient in the same scaled norm; it is
    reported but not part of :attr:`OracleReport.ok` since Hessian elements
    of nonsmooth gradients need not match differences.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("at least one sample is required")
    n = oracle.dim
    reports = []
    for x in samples:
        x = as_point(x, n)
        delta = 1e-6 * (1.0 + np.linalg.norm(x))
        grad = _finite_vector(oracle.g_grad(x), "g gradient", n)
        A = hessian_element(oracle, x)
        fd = np.empty(n)
        fd_hess = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = delta
            fd[i] = (oracle.g_value(x + e) - oracle.g_value(x - e)) / (2 * delta)
            fd_hess[:, i] = (oracle.g_grad(x + e) - oracle.g_grad(x - e)) / (2 * delta)
        grad_res = float(np.max(np.abs(grad - fd) / (1.0 + np.abs(grad))))
        hess_res = float(np.max(np.abs(A - fd_hess) / (1.0 + np.abs(A))))
        scale = np.max(np.abs(A)) or 1.0
        sym = float(np.max(np.abs(A - A.T)) / scale)
        lam_min = float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
        violation = oracle.xi_bound is not None and lam_min < oracle.xi_bound - 1e-8
        reports.append(SampleReport(x, grad_res, sym, hess_res, lam_min, bool(violation)))
    return OracleReport(reports, tol)


def check_neg_h_subgrad(oracle, x, d, ts=(1e-3, 1e-4, 1e-5)):
    """Sampled upper directional derivative of ``-h`` minus ``<v, d>``.

    For a prox-regular ``h`` the upper directional derivative of ``-h`` in
    direction ``d`` is the infimum of ``<v, d>`` over its limiting
    subgradients, hence never exceeds the pairing with the selected ``v``.
    A value ``<= tol`` therefore supports the selection.
    """
    x = as_point(x, oracle.dim)
    d = np.asarray(d, dtype=float)
    v = oracle.neg_h_subgrad(x)
    h0 = oracle.h_value(x)
    quotients = [(-oracle.h_value(x + t * d) + h0) / t for t in ts]
    return float(max(quotients) - np.dot(v, d))

