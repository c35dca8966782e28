"""Closed-form fixtures and seeded instance generators.

Every generator is a pure function of its parameters and seed. Random draws
use ``numpy.random.default_rng`` on child seeds obtained by
``SeedSequence(seed).spawn(k)``; the i-th child always feeds the i-th
component in the order documented on each generator.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .core import DifferenceOracle
from .envelope import (CompositeProblem, L1Norm, ZeroFunction, ball_indicator,
                       ball_union_indicator, quadratic_problem, sphere_indicator)
from .exceptions import UnknownFixture

__all__ = [
    "FIXTURE_INFO",
    "fixture",
    "fixture_names",
    "quad_abs_oracle",
    "separable_kink_oracle",
    "BiochemModel",
    "biochem_oracles",
    "gen_biochem",
    "TrustRegionInstance",
    "gen_trust_region",
    "BallUnionInstance",
    "gen_ball_union",
    "trust_region_problem",
    "ball_union_problem",
    "gen_sphere_quadratic",
    "gen_1d_composite",
    "instance_to_json",
    "instance_from_json",
]


def _streams(seed, k):
    children = np.random.SeedSequence(seed).spawn(k)
    return [np.random.default_rng(c) for c in children]


# ---------------------------------------------------------------------------
# toy difference oracles


def quad_abs_oracle(select_at_zero=1.0):
    """``g = x^2/2``, ``h = |x|``; stationary points are ``+-1``.

    The subdifferential of ``-|.|`` at zero is ``{-1, 1}``; ``select_at_zero``
    picks the element returned there.
    """
    def neg_h(x):
        return np.where(x > 0, -1.0, np.where(x < 0, 1.0, float(select_at_zero)))

    return DifferenceOracle(
        dim=1,
        g_value=lambda x: 0.5 * float(x @ x),
        g_grad=lambda x: np.array(x, dtype=float),
        g_hess_element=lambda x: np.eye(1),
        h_value=lambda x: float(np.abs(x).sum()),
        neg_h_subgrad=neg_h,
        h_subgrad=lambda x: np.where(x >= 0, 1.0, -1.0),
        xi_bound=1.0,
        name="quad_abs",
    )


def _quadratic_only(n=1):
    return DifferenceOracle(
        dim=n,
        g_value=lambda x: 0.5 * float(x @ x),
        g_grad=lambda x: np.array(x, dtype=float),
        g_hess_element=lambda x: np.eye(n),
        h_value=lambda x: 0.0,
        neg_h_subgrad=lambda x: np.zeros(n),
        h_subgrad=lambda x: np.zeros(n),
        xi_bound=1.0,
        name="quad",
    )


def _l1_minus_l2_oracle():
    # g = (x1 - 1)^2 / 2, h = ||x||_2 - ||x||_1.
    # -h = ||x||_1 - ||x||_2: the l1 part contributes sign(x_i) with +1 at
    # x_i = 0; the -l2 part contributes -x/||x|| and -e_1 at the origin.
    def neg_h(x):
        s = np.where(x >= 0, 1.0, -1.0)
        nx = np.linalg.norm(x)
        if nx == 0:
            u = np.zeros_like(x)
            u[0] = 1.0
        else:
            u = x / nx
        return s - u

    hess = np.diag([1.0, 0.0])
    return DifferenceOracle(
        dim=2,
        g_value=lambda x: 0.5 * (x[0] - 1.0) ** 2,
        g_grad=lambda x: np.array([x[0] - 1.0, 0.0]),
        g_hess_element=lambda x: hess,
        h_value=lambda x: float(np.linalg.norm(x) - np.abs(x).sum()),
        neg_h_subgrad=neg_h,
        xi_bound=0.0,
        name="l1_minus_l2",
    )


def _oscillating_integrand(t):
    return t ** 4 * math.sin(math.pi / t) if t != 0 else 0.0


def _oscillating_oracle():
    # g(x) = int_0^x t^4 sin(pi/t) dt, h = 0
    def g_value(x):
        val, _ = integrate.quad(_oscillating_integrand, 0.0, float(x[0]),
                                epsabs=1e-14, epsrel=1e-13, limit=500)
        return val

    def g_grad(x):
        t = float(x[0])
        return np.array([_oscillating_integrand(t)])

    def g_hess(x):
        t = float(x[0])
        if t == 0:
            return np.zeros((1, 1))
        a = math.pi / t
        return np.array([[4 * t ** 3 * math.sin(a) - math.pi * t ** 2 * math.cos(a)]])

    return DifferenceOracle(dim=1, g_value=g_value, g_grad=g_grad, g_hess_element=g_hess,
                            h_value=lambda x: 0.0, neg_h_subgrad=lambda x: np.zeros(1),
                            name="oscillating_integral")


def separable_kink_oracle(n, variant="abs"):
    """``g = ||x||^2/2`` minus a sum of piecewise-linear ``h_i``.

    ``variant="abs"`` uses ``h_i = |x_i| + |1 - |x_i||`` (equal to 1 on
    ``[-1, 1]`` and ``2|x_i| - 1`` outside); ``variant="shift"`` uses
    ``h_i = |x_i| + |1 - x_i|``. At a kink the element of the
    subdifferential of ``-h_i`` is its right-hand derivative.
    """
    if variant == "abs":
        def h_i(x):
            return np.abs(x) + np.abs(1.0 - np.abs(x))

        def neg_h(x):
            return np.where(x >= 1.0, -2.0, np.where(x < -1.0, 2.0, 0.0))

        def h_sub(x):
            return np.where(x > 1.0, 2.0, np.where(x < -1.0, -2.0, 0.0))
    elif variant == "shift":
        def h_i(x):
            return np.abs(x) + np.abs(1.0 - x)

        def neg_h(x):
            return np.where(x >= 1.0, -2.0, np.where(x < 0.0, 2.0, 0.0))

        def h_sub(x):
            return np.where(x > 1.0, 2.0, np.where(x < 0.0, -2.0, 0.0))
    else:
        raise ValueError(f"unknown variant {variant!r}")

    return DifferenceOracle(
        dim=n,
        g_value=lambda x: 0.5 * float(x @ x),
        g_grad=lambda x: np.array(x, dtype=float),
        g_hess_element=lambda x: np.eye(n),
        h_value=lambda x: float(h_i(x).sum()),
        neg_h_subgrad=lambda x: neg_h(np.asarray(x, dtype=float)).astype(float),
        h_subgrad=lambda x: h_sub(np.asarray(x, dtype=float)).astype(float),
        xi_bound=1.0,
        name=f"separable_kink[{variant}]",
    )


def _sphere_quadratic(lam=0.9):
    Q = np.array([[0.0, -1.0], [-1.0, 0.0]])
    return quadratic_problem(Q, np.zeros(2), sphere_indicator(1.0), lam=lam, name="circle_bilinear")


def _quartic(lam=0.1):
    return CompositeProblem(
        f_value=lambda x: 0.25 * float(np.sum(x ** 4)),
        f_grad=lambda x: x ** 3,
        f_hess=lambda x: np.diag(3 * x ** 2),
        lipschitz_grad=math.inf,
        psi=ZeroFunction(),
        lam=lam,
        dim=1,
        check=False,
        name="quartic_envelope",
    )


_FIXTURES = {
    "quad": _quadratic_only,
    "quad_abs": quad_abs_oracle,
    "l1_minus_l2": _l1_minus_l2_oracle,
    "oscillating_integral": _oscillating_oracle,
    "abs_kinks": lambda n=1: separable_kink_oracle(n, "abs"),
    "shifted_kinks": lambda n=1: separable_kink_oracle(n, "shift"),
    "circle_bilinear": _sphere_quadratic,
    "quartic_envelope": _quartic,
}

#: Known point sets of the scalar fixtures (per coordinate for separable ones).
FIXTURE_INFO = {
    "quad_abs": {"stationary": [-1.0, 1.0], "global_minima": [-1.0, 1.0]},
    "l1_minus_l2": {"x_bar": [1.0, 0.0], "phi_bar": 0.0},
    "abs_kinks": {"critical": [-2.0, -1.0, 0.0, 1.0, 2.0], "stationary": [-2.0, 0.0, 2.0],
               "global_minima": [-2.0, 0.0, 2.0], "min_value": -1.0},
    "shifted_kinks": {"stationary": [-2.0, 0.0, 2.0]},
}


def fixture_names():
    return sorted(_FIXTURES)


def fixture(name, **params):
    """Closed-form fixture by name.

    Difference-form fixtures return a :class:`DifferenceOracle`; envelope
    fixtures (``"circle_bilinear"``, ``"quartic_envelope"``) return a :class:`CompositeProblem`.
    Separable fixtures take ``n``; envelope fixtures take ``lam``.
    """
    try:
        factory = _FIXTURES[name]
    except KeyError:
        raise UnknownFixture(name) from None
    return factory(**params)


# ---------------------------------------------------------------------------
# biochemical reaction networks


@dataclass
class BiochemModel:
    """Mass-action network with ``m`` species and ``n`` reversible reactions.

    ``F`` and ``R`` hold forward and reverse stoichiometric coefficients;
    ``w`` holds ``2n`` log kinetic parameters.
    """

    F: np.ndarray
    R: np.ndarray
    w: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.F.shape != self.R.shape or self.F.ndim != 2:
            raise ValueError("F and R must be matrices of equal shape")
        if self.w.shape != (2 * self.F.shape[1],):
            raise ValueError("w must have length 2n")
        if np.any(self.F < 0) or np.any(self.R < 0):
            raise ValueError("stoichiometric entries must be nonnegative")

    @property
    def m(self):
        return self.F.shape[0]

    @property
    def n(self):
        return self.F.shape[1]

    @property
    def K(self):
        return np.hstack([self.F, self.R])

    @property
    def P(self):
        return np.hstack([self.R, self.F])

    @property
    def S(self):
        return self.K - self.P


def _sym(A):
    return 0.5 * (A + A.T)


def biochem_oracles(model, split="product"):
    """Difference oracle for ``||p(x) - c(x)||^2``.

    ``p = [F, R] e(x)`` and ``c = [R, F] e(x)`` with
    ``e(x) = exp(w + [F, R]^T x)``. ``split="product"`` uses
    ``g = ||p||^2 + ||c||^2``, ``h = 2 <p, c>``; ``split="dc"`` uses
    ``g = 2(||p||^2 + ||c||^2)``, ``h = ||p + c||^2``. Both ``g`` are convex,
    so ``xi_bound = 0`` and the semi-Newton method needs ``rho_k >= zeta``.
    """
    if split not in ("product", "dc"):
        raise ValueError(f"unknown split {split!r}")
    K, P, w = model.K, model.P, model.w
    scale = 1.0 if split == "product" else 2.0

    def parts(x):
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(w + K.T @ x)
            p = K @ e
            c = P @ e
            Jp = (K * e) @ K.T
            Jc = (P * e) @ K.T
        return e, p, c, Jp, Jc

    def g_value(x):
        _, p, c, _, _ = parts(x)
        return scale * float(p @ p + c @ c)

    def g_grad(x):
        _, p, c, Jp, Jc = parts(x)
        return 2 * scale * (Jp.T @ p + Jc.T @ c)

    def g_hess(x):
        e, p, c, Jp, Jc = parts(x)
        curv = (K * (e * (K.T @ p + P.T @ c))) @ K.T
        return _sym(2 * scale * (Jp.T @ Jp + Jc.T @ Jc + curv))

    if split == "product":
        def h_value(x):
            _, p, c, _, _ = parts(x)
            return 2.0 * float(p @ c)

        def h_grad(x):
            _, p, c, Jp, Jc = parts(x)
            return 2.0 * (Jp.T @ c + Jc.T @ p)
    else:
        def h_value(x):
            _, p, c, _, _ = parts(x)
            s = p + c
            return float(s @ s)

        def h_grad(x):
            _, p, c, Jp, Jc = parts(x)
            return 2.0 * (Jp + Jc).T @ (p + c)

    return DifferenceOracle(dim=model.m, g_value=g_value, g_grad=g_grad, g_hess_element=g_hess,
                            h_value=h_value, neg_h_subgrad=lambda x: -h_grad(x),
                            h_subgrad=h_grad, xi_bound=0.0, name=f"biochem[{split}]")


def biochem_residual(model, x):
    """Steady-state residual ``S e(x)``; the objective is its squared norm."""
    return model.S @ np.exp(model.w + model.K.T @ np.asarray(x, dtype=float))


def gen_biochem(seed, m=None, n=None, max_coeff=2):
    """Synthetic network with a steady state for every choice of ``w``.

    Streams: sizes, stoichiometry, kinetic parameters, starting point.
    ``m`` is drawn from ``5..30`` and ``n`` from ``ceil(m/2)..m``. Each reaction
    takes one or two reactant species and one or two product species with
    coefficients in ``{1, .., max_coeff}``. Draws are repeated until
    ``F - R`` has full column rank and ``[F, R]`` full row rank, which makes
    ``(F - R)^T x = w_rev - w_fwd`` solvable, i.e. a detailed-balanced
    steady state exists.

    Returns
    -------
    model : BiochemModel
    x0 : ndarray
        Starting point uniform in ``(-2, 2)^m``.
    """
    r_size, r_stoich, r_w, r_x0 = _streams(seed, 4)
    if m is None:
        m = int(r_size.integers(5, 31))
    if n is None:
        n = int(r_size.integers((m + 1) // 2, m + 1))
    while True:
        F = np.zeros((m, n))
        R = np.zeros((m, n))
        for j in range(n):
            species = r_stoich.permutation(m)
            na, nb = r_stoich.integers(1, 3, size=2)
            F[species[:na], j] = r_stoich.integers(1, max_coeff + 1, size=na)
            R[species[na:na + nb], j] = r_stoich.integers(1, max_coeff + 1, size=nb)
        K = np.hstack([F, R])
        if np.linalg.matrix_rank(F - R) == n and np.linalg.matrix_rank(K) == m:
            break
    w = r_w.uniform(-1.0, 1.0, size=2 * n)
    x0 = r_x0.uniform(-2.0, 2.0, size=m)
    return BiochemModel(F, R, w, seed=seed), x0


# ---------------------------------------------------------------------------
# quadratic instances


def _householder_product(us):
    n = us[0].size
    U = np.eye(n)
    for u in us:
        U = U @ (np.eye(n) - 2.0 * np.outer(u, u) / (u @ u))
    return U


@dataclass
class TrustRegionInstance:
    """``min x^T Q x / 2 + b^T x`` over ``||x|| <= r`` in the hard case.

    ``Q = U diag(D) U^T`` with ``U`` a product of three Householder
    reflections; ``b = U z`` with ``z`` zero at the index of the smallest
    entry of ``D``.
    """

    n: int
    seed: int
    Q: np.ndarray
    b: np.ndarray
    r: float
    D: np.ndarray
    z: np.ndarray
    us: list
    x0: np.ndarray
    d_norm: float = field(default=0.0)

    @property
    def U(self):
        return _householder_product(self.us)

    def objective(self, x):
        return 0.5 * float(x @ self.Q @ x) + float(self.b @ x)


def _spectral_data(n, streams, low, high):
    r_u1, r_u2, r_u3, r_D, r_z = streams
    us = [r.uniform(-1.0, 1.0, size=n) for r in (r_u1, r_u2, r_u3)]
    U = _householder_product(us)
    D = r_D.uniform(low, high, size=n)
    z = r_z.uniform(-1.0, 1.0, size=n)
    i_min = int(np.argmin(D))
    z[i_min] = 0.0
    Q = _sym(U @ np.diag(D) @ U.T)
    b = U @ z
    return us, U, D, z, Q, b, i_min


def gen_trust_region(n, seed):
    """Hard-case trust-region instance.

    Streams in order: ``u1, u2, u3, D, z, r, x0``. The radius is uniform in
    ``(||d||, 2||d||)`` with ``d_i = z_i / (D_i - min D)`` (zero at the
    minimizing index) and ``x0`` is uniform in the ball.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    streams = _streams(seed, 7)
    us, U, D, z, Q, b, i_min = _spectral_data(n, streams[:5], -5.0, 5.0)
    gap = D - D[i_min]
    d = np.zeros(n)
    mask = np.arange(n) != i_min
    d[mask] = z[mask] / gap[mask]
    dn = float(np.linalg.norm(d))
    r = float(streams[5].uniform(dn, 2 * dn))
    r_x0 = streams[6]
    direction = r_x0.standard_normal(n)
    direction /= np.linalg.norm(direction)
    x0 = direction * r * r_x0.uniform() ** (1.0 / n)
    return TrustRegionInstance(n, seed, Q, b, r, D, z, us, x0, dn)


@dataclass
class BallUnionInstance:
    """``min x^T Q x / 2 + b^T x`` over the union of balls of radius
    ``c sqrt(n) / 2`` centered at ``{-4..4}^n``."""

    n: int
    seed: int
    c: float
    convex: bool
    Q: np.ndarray
    b: np.ndarray
    D: np.ndarray
    z: np.ndarray
    us: list
    x0: np.ndarray

    @property
    def radius(self):
        return self.c * math.sqrt(self.n) / 2.0

    def objective(self, x):
        return 0.5 * float(x @ self.Q @ x) + float(self.b @ x)


def gen_ball_union(n, c, convex, seed):
    """Quadratic over a union of lattice balls.

    Streams in order: ``u1, u2, u3, D, z, x0``. ``D`` is uniform in
    ``(0, 5)`` for the convex case and ``(-5, 5)`` otherwise; ``x0`` is
    uniform in ``[-5, 5]^n``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    streams = _streams(seed, 6)
    low = 0.0 if convex else -5.0
    us, U, D, z, Q, b, _ = _spectral_data(n, streams[:5], low, 5.0)
    x0 = streams[5].uniform(-5.0, 5.0, size=n)
    return BallUnionInstance(n, seed, float(c), bool(convex), Q, b, D, z, us, x0)


def trust_region_problem(inst, lam_factor=0.8):
    """Composite problem ``f + indicator of B_r(0)``."""
    return quadratic_problem(inst.Q, inst.b, ball_indicator(inst.r), lam_factor=lam_factor,
                             name=f"trust_region[n={inst.n},seed={inst.seed}]")


def ball_union_problem(inst, lam_factor=0.8):
    """Composite problem ``f + indicator of the ball union``."""
    return quadratic_problem(inst.Q, inst.b, ball_union_indicator(inst.radius),
                             lam_factor=lam_factor,
                             name=f"ball_union[n={inst.n},c={inst.c},seed={inst.seed}]")


def gen_sphere_quadratic(seed, lam_factor=0.8):
    """Random quadratic over the unit circle, generalizing the ``circle_bilinear``
    fixture.

    Streams: ``Q`` entries, ``b``, ``x0``. Returns ``(problem, x0)``.
    """
    r_q, r_b, r_x = _streams(seed, 3)
    a = r_q.uniform(-1.0, 1.0, size=3)
    Q = np.array([[a[0], a[1]], [a[1], a[2]]])
    b = r_b.uniform(-0.5, 0.5, size=2)
    x0 = r_x.uniform(-2.0, 2.0, size=2)
    return quadratic_problem(Q, b, sphere_indicator(1.0), lam_factor=lam_factor,
                             name=f"sphere_quadratic[seed={seed}]"), x0


def gen_1d_composite(seed):
    """Scalar ``f(x) = a x^2/2 + b x + c cos x`` plus ``kappa |x - s|``.

    ``L_f = a + c`` bounds ``|f''|``; ``lam`` is drawn in
    ``(0.1, 0.9) / L_f``. The kink ``s`` is rounded to a multiple of
    ``1e-4`` so it lies on the evaluation grid used in tests.

    Returns
    -------
    problem : CompositeProblem
    phi : callable
        Vectorized ``f + psi`` for grid evaluation.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(1.0, 2.0)
    bb = rng.uniform(-2.0, 2.0)
    cc = rng.uniform(0.0, 2.0)
    kappa = rng.uniform(0.0, 1.0)
    s = round(rng.uniform(-2.0, 2.0), 4)
    L = a + cc
    lam = rng.uniform(0.1, 0.9) / L
    psi = L1Norm(kappa, s) if kappa > 0 else ZeroFunction()

    problem = CompositeProblem(
        f_value=lambda x: float(0.5 * a * x[0] ** 2 + bb * x[0] + cc * math.cos(x[0])),
        f_grad=lambda x: np.array([a * x[0] + bb - cc * math.sin(x[0])]),
        f_hess=lambda x: np.array([[a - cc * math.cos(x[0])]]),
        lipschitz_grad=L,
        psi=psi,
        lam=lam,
        dim=1,
        name=f"scalar_composite[seed={seed}]",
    )

    def phi(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * a * t ** 2 + bb * t + cc * np.cos(t) + kappa * np.abs(t - s)

    return problem, phi


# ---------------------------------------------------------------------------
# serialization


def _to_plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


_KINDS = {"trust_region": TrustRegionInstance, "ball_union": BallUnionInstance,
          "biochem": BiochemModel}


def instance_to_json(inst):
    """JSON text of an instance (matrices as row-major nested lists)."""
    kind = {v: k for k, v in _KINDS.items()}[type(inst)]
    data = {k: _to_plain(v) for k, v in asdict(inst).items()}
    return json.dumps({"schema_version": 1, "kind": kind, "data": data}, sort_keys=True)


def instance_from_json(text):
    """Inverse of :func:`instance_to_json`."""
    payload = json.loads(text)
    cls = _KINDS[payload["kind"]]
    data = dict(payload["data"])
    for key, value in data.items():
        if isinstance(value, list):
            data[key] = np.array(value, dtype=float) if key != "us" else [
                np.array(u, dtype=float) for u in value]
    return cls(**data)
