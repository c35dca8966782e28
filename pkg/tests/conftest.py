"""Shared fixtures and independent reference oracles for the test suite."""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import optimize

from rcsn.harness import bundled_config, execute


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def bundled_runs(tmp_path_factory):
    """Run every bundled experiment config once per session.

    Returns a mapping ``name -> (ExperimentResult, out_dir, seconds)``.
    """
    import time

    cache = {}

    def get(name):
        if name not in cache:
            out = tmp_path_factory.mktemp(name)
            t0 = time.perf_counter()
            res = execute(bundled_config(name), out_dir=out, jobs=1)
            cache[name] = (res, out, time.perf_counter() - t0)
        return cache[name]

    return get


def numeric_grad(fun, x, delta=1e-6):
    """Central differences with step ``delta * (1 + ||x||)``."""
    x = np.asarray(x, dtype=float)
    h = delta * (1.0 + np.linalg.norm(x))
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return out


def ball_quadratic_min(Q, b, center, r):
    """Exact minimum of ``x^T Q x/2 + b^T x`` over ``||x - center|| <= r``.

    Solved through the eigendecomposition of ``Q`` and the secular equation
    ``||(Q + mu I)^{-1} g|| = r`` (with the usual hard-case completion).
    Returns ``(value, x)``.
    """
    Q = np.asarray(Q, dtype=float)
    center = np.asarray(center, dtype=float)
    g = Q @ center + b
    lam, V = np.linalg.eigh(Q)
    gt = V.T @ g

    def f(x):
        return 0.5 * float(x @ Q @ x) + float(b @ x)

    def step(mu):
        return -gt / (lam + mu)

    candidates = []
    if lam[0] > 0:
        y = V @ step(0.0)
        if np.linalg.norm(y) <= r:
            candidates.append(center + y)
    lo = max(0.0, -lam[0])
    # limit of ||step(mu)|| as mu decreases to lo
    flat = np.abs(lam + lo) <= 1e-12 * (1 + np.abs(lam).max())
    tiny = np.abs(gt) <= 1e-14 * (1 + np.abs(gt).max())
    if np.any(flat & ~tiny):
        limit = math.inf
    else:
        limit = float(np.linalg.norm(np.where(flat, 0.0, gt / np.where(flat, 1.0, lam + lo))))
    if limit > r:
        # regular case: the norm decreases from above r to 0 on (lo, inf)
        def phi(mu):
            return np.linalg.norm(step(mu)) - r

        a = lo + 1e-15 * (1 + abs(lo))
        for _ in range(100):
            if phi(a) > 0:
                break
            a = lo + (a - lo) * 1e-3
        bnd = lo + 1.0
        while phi(bnd) > 0:
            bnd = lo + 2 * (bnd - lo)
        mu = optimize.brentq(phi, a, bnd, xtol=1e-15, rtol=1e-15, maxiter=500)
        candidates.append(center + V @ step(mu))
    elif lam[0] <= 0:
        # hard case: fill the remaining length along the bottom eigenvectors
        yt = np.where(flat, 0.0, -gt / np.where(flat, 1.0, lam + lo))
        yt[np.flatnonzero(flat)[0]] = math.sqrt(max(r * r - float(yt @ yt), 0.0))
        candidates.append(center + V @ yt)
    if not candidates:  # pragma: no cover - defensive
        raise RuntimeError("no candidate found")
    best = min(candidates, key=f)
    return f(best), best


def projected_gradient(Q, b, project, x0, lam, iters=200000, tol=1e-13):
    """Plain projected-gradient iteration used as an independent oracle."""
    x = project(np.asarray(x0, dtype=float))
    for _ in range(iters):
        x_new = project(x - lam * (Q @ x + b))
        if np.linalg.norm(x_new - x) <= tol:
            return x_new
        x = x_new
    return x


ACCEPTANCE_LINES = {}


@pytest.fixture
def report():
    """``report(number, ok, detail)`` records one acceptance verdict line."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
