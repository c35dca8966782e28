"""Moreau envelope, Asplund function and forward-backward envelope.

For ``phi = f + psi`` with smooth ``f`` and prox-friendly ``psi`` the
forward-backward envelope

    phi_lam(x) = f(x) - lam/2 ||grad f(x)||^2 + e_lam psi(x - lam grad f(x))

splits as ``g - h`` with ``g = f + ||x||^2 / (2 lam)`` and
``h = <grad f(x), x> + A_lam psi(x - lam grad f(x))`` where ``A`` is the
Asplund function ``||y||^2 / (2 lam) - e_lam psi(y)``. The split is exposed as
a :class:`~rcsn.core.DifferenceOracle`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import prox as _prox
from .core import DifferenceOracle
from .exceptions import ConfigError, ProxUndefined

__all__ = [
    "ProxFriendly",
    "ZeroFunction",
    "L1Norm",
    "Indicator",
    "ball_indicator",
    "sphere_indicator",
    "finite_indicator",
    "ball_union_indicator",
    "box_indicator",
    "CompositeProblem",
    "quadratic_problem",
    "moreau",
    "asplund",
    "neg_asplund_subgrad",
    "prox_point",
    "fbe_value",
    "fbe_subgrad",
    "fbe_difference_oracle",
]


class ProxFriendly:
    """Interface for ``psi`` with a computable proximal selection.

    Subclasses implement ``value(z)`` and ``prox(x, lam)``; ``threshold`` is
    the prox-boundedness threshold (``inf`` for bounded-below ``psi``).
    """

    threshold = math.inf

    def value(self, z):
        raise NotImplementedError

    def prox(self, x, lam):
        raise NotImplementedError

    def __call__(self, z):
        return self.value(z)


class ZeroFunction(ProxFriendly):
    """``psi = 0``; its prox is the identity."""

    def value(self, z):
        return 0.0

    def prox(self, x, lam):
        return np.array(x, dtype=float)


@dataclass(frozen=True)
class L1Norm(ProxFriendly):
    """``psi(z) = kappa ||z - shift||_1``."""

    kappa: float = 1.0
    shift: float = 0.0

    def value(self, z):
        return self.kappa * float(np.sum(np.abs(np.asarray(z) - self.shift)))

    def prox(self, x, lam):
        x = np.asarray(x, dtype=float)
        return self.shift + _prox.soft_threshold(x - self.shift, self.kappa * lam)


class Indicator(ProxFriendly):
    """Indicator of a closed set given by its projection.

    Parameters
    ----------
    project : callable
        Deterministic selection of the metric projection.
    contains : callable
        Membership test used for :meth:`value`.
    name : str
    """

    def __init__(self, project, contains, name="set"):
        self._project = project
        self._contains = contains
        self.name = name

    def value(self, z):
        return 0.0 if self._contains(np.asarray(z, dtype=float)) else math.inf

    def prox(self, x, lam):
        return self._project(np.asarray(x, dtype=float))

    def project(self, x):
        return self._project(np.asarray(x, dtype=float))

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self._project(x)))

    def __repr__(self):
        return f"Indicator({self.name})"


def ball_indicator(r, center=0.0, atol=1e-9):
    """Indicator of ``B_r(center)``."""
    return Indicator(lambda x: _prox.project_ball(x, center, r),
                     lambda z: np.linalg.norm(z - center) <= r + atol,
                     f"ball(r={r})")


def sphere_indicator(r=1.0, center=0.0, atol=1e-9):
    """Indicator of the sphere of radius ``r``."""
    return Indicator(lambda x: _prox.project_sphere(x, center, r),
                     lambda z: abs(np.linalg.norm(z - center) - r) <= atol,
                     f"sphere(r={r})")


def finite_indicator(points, atol=1e-12):
    """Indicator of a finite point set."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return Indicator(lambda x: _prox.project_finite(x, pts),
                     lambda z: bool(np.any(np.all(np.abs(pts - z.reshape(-1)) <= atol, axis=1))),
                     f"finite({len(pts)})")


def ball_union_indicator(r, low=-4, high=4, atol=1e-9):
    """Indicator of the union of radius-``r`` balls at lattice points."""
    def contains(z):
        c = _prox.nearest_lattice_center(z, low, high)
        return np.linalg.norm(z - c) <= r + atol

    return Indicator(lambda x: _prox.project_ball_union(x, r, low, high), contains,
                     f"ball_union(r={r})")


def box_indicator(lower, upper, atol=1e-12):
    """Indicator of a box."""
    return Indicator(lambda x: _prox.project_box(x, lower, upper),
                     lambda z: bool(np.all(z >= lower - atol) and np.all(z <= upper + atol)),
                     "box")


@dataclass
class CompositeProblem:
    """``f + psi`` with smooth ``f`` and an envelope parameter ``lam``.

    Parameters
    ----------
    f_value, f_grad, f_hess : callable
    lipschitz_grad : float
        Lipschitz constant ``L_f`` of ``grad f``; ``inf`` if there is none.
    psi : ProxFriendly
    lam : float
        Must lie in ``(0, min(1/L_f, psi.threshold))`` unless ``check`` is
        false (used for counterexamples).
    dim : int
    """

    f_value: Callable
    f_grad: Callable
    f_hess: Callable
    lipschitz_grad: float
    psi: ProxFriendly
    lam: float
    dim: int
    check: bool = True
    name: str = ""

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.check:
            upper = min(1.0 / self.lipschitz_grad if self.lipschitz_grad > 0 else math.inf,
                        self.psi.threshold)
            if not self.lam < upper:
                raise ConfigError(f"lambda must lie in (0, {upper:g}), got {self.lam}")


def quadratic_problem(Q, b, psi, lam=None, lam_factor=0.8, name="quadratic"):
    """``f(x) = x^T Q x / 2 + b^T x`` with ``lam = lam_factor / ||Q||_2`` by default."""
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    L = float(np.linalg.norm(Q, 2))
    if lam is None:
        lam = lam_factor / L
    return CompositeProblem(
        f_value=lambda x: 0.5 * x @ Q @ x + b @ x,
        f_grad=lambda x: Q @ x + b,
        f_hess=lambda x: Q,
        lipschitz_grad=L,
        psi=psi,
        lam=float(lam),
        dim=b.size,
        name=name,
    )


def _check_lam(psi, lam):
    if not 0 < lam < psi.threshold:
        raise ConfigError(f"lambda must lie in (0, {psi.threshold:g}), got {lam}")


def _select(psi, lam, x):
    p = psi.prox(x, lam)
    if p is None:
        raise ProxUndefined("prox selection failed")
    return np.asarray(p, dtype=float)


def moreau(psi, lam, x):
    """``psi(p) + ||x - p||^2 / (2 lam)`` at the selected prox point ``p``."""
    _check_lam(psi, lam)
    x = np.asarray(x, dtype=float)
    p = _select(psi, lam, x)
    return psi.value(p) + float(np.sum((x - p) ** 2)) / (2 * lam)


def asplund(psi, lam, x):
    """Asplund function ``||x||^2 / (2 lam) - e_lam psi(x)``.

    Evaluated in its supremum form ``<p, x>/lam - psi(p) - ||p||^2/(2 lam)``
    at the prox point, which is algebraically the same quantity and avoids
    the cancellation of two large quadratics.
    """
    _check_lam(psi, lam)
    x = np.asarray(x, dtype=float)
    p = _select(psi, lam, x)
    return float(p @ x - 0.5 * (p @ p)) / lam - psi.value(p)


def neg_asplund_subgrad(psi, lam, x):
    """``-p / lam`` for the selected prox point ``p``."""
    _check_lam(psi, lam)
    return -_select(psi, lam, np.asarray(x, dtype=float)) / lam


def prox_point(problem, x):
    """Forward-backward point ``Prox(x - lam grad f(x))``."""
    x = np.asarray(x, dtype=float)
    return _select(problem.psi, problem.lam, x - problem.lam * problem.f_grad(x))


def fbe_value(problem, x):
    """Forward-backward envelope value.

    Computed as ``f(x) + <grad f(x), p - x> + ||p - x||^2/(2 lam) + psi(p)``
    with ``p`` the forward-backward point. This equals
    ``f - lam/2 ||grad f||^2 + e_lam psi(x - lam grad f)`` but keeps full
    relative accuracy near fixed points where ``grad f`` is large.
    """
    x = np.asarray(x, dtype=float)
    lam = problem.lam
    grad = problem.f_grad(x)
    p = _select(problem.psi, lam, x - lam * grad)
    r = p - x
    return (problem.f_value(x) + float(grad @ r) + float(r @ r) / (2 * lam)
            + problem.psi.value(p))


def fbe_subgrad(problem, x):
    """``(I/lam - hess f(x)) (x - p)`` with ``p`` the forward-backward point."""
    x = np.asarray(x, dtype=float)
    r = x - prox_point(problem, x)
    return r / problem.lam - np.asarray(problem.f_hess(x)) @ r


def fbe_difference_oracle(problem):
    """Difference-form oracle of the forward-backward envelope.

    ``g = f + ||x||^2/(2 lam)`` has Hessian ``hess f + I/lam`` with lower
    bound ``1/lam - L_f``. The element of the subdifferential of ``-h`` is
    ``-hess f x - grad f + (I - lam hess f)(-p/lam)``.
    """
    lam = problem.lam
    psi = problem.psi
    n = problem.dim
    eye = np.eye(n)

    def g_value(x):
        return problem.f_value(x) + float(x @ x) / (2 * lam)

    def g_grad(x):
        return problem.f_grad(x) + x / lam

    def g_hess(x):
        H = np.asarray(problem.f_hess(x), dtype=float)
        return 0.5 * (H + H.T) + eye / lam

    def h_value(x):
        grad = problem.f_grad(x)
        return float(grad @ x) + asplund(psi, lam, x - lam * grad)

    def neg_h_subgrad(x):
        grad = problem.f_grad(x)
        H = np.asarray(problem.f_hess(x), dtype=float)
        v = neg_asplund_subgrad(psi, lam, x - lam * grad)
        return -H @ x - grad + v - lam * (H @ v)

    xi = 1.0 / lam - problem.lipschitz_grad if math.isfinite(problem.lipschitz_grad) else None
    return DifferenceOracle(dim=n, g_value=g_value, g_grad=g_grad, g_hess_element=g_hess,
                            h_value=h_value, neg_h_subgrad=neg_h_subgrad, xi_bound=xi,
                            name=f"fbe[{problem.name}]")
