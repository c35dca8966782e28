"""Empirical convergence-rate classification and run summaries."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InsufficientData, KeyMismatch

__all__ = [
    "RateClass",
    "classify_errors",
    "classify_rate",
    "squared_ratios",
    "RunResult",
    "summarize",
    "compare",
    "summary_csv",
    "SUMMARY_COLUMNS",
]


@dataclass(frozen=True)
class RateClass:
    """Observed rate: ``Finite``, ``Quadratic``, ``Superlinear``, ``Linear``
    or ``Sublinear``.

    ``mu`` is the linear factor and ``bound`` the largest squared ratio
    ``e_{k+1} / e_k^2`` in the fitted window.
    """

    kind: str
    mu: Optional[float] = None
    bound: Optional[float] = None

    def __str__(self):
        if self.kind == "Linear":
            return f"Linear({self.mu:.3g})"
        if self.kind == "Quadratic":
            return f"Quadratic({self.bound:.3g})"
        return self.kind


def squared_ratios(errors):
    """``e_{k+1} / e_k^2`` for consecutive pairs with ``e_k > 0``."""
    e = np.asarray(errors, dtype=float)
    out = []
    for a, b in zip(e[:-1], e[1:]):
        if a > 0:
            out.append(b / (a * a))
    return np.array(out)


def classify_errors(errors, rel_floor=1e-13, growth=4.0):
    """Classify a sequence of distances to the limit.

    Errors at or below ``rel_floor * e_0`` count as having reached the
    limit. If that happens before four errors above the floor are available
    the run is ``Finite``. Otherwise the last ``max(5, 20%)`` usable errors
    are examined:

    * ``Quadratic`` when plain ratios strictly decrease and the squared
      ratios ``e_{k+1}/e_k^2`` grow by at most ``growth`` across the window;
    * ``Superlinear`` when plain ratios strictly decrease below 0.1;
    * ``Linear(mu)`` when plain ratios stay within 0.1 of their median
      ``mu < 1``;
    * ``Sublinear`` otherwise.

    Every criterion uses ratios only, so the result is invariant under
    rescaling of the sequence.

    Raises
    ------
    InsufficientData
        Fewer than four usable values and no exact convergence.
    """
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise InsufficientData("empty error sequence")
    floor = rel_floor * e[0] if e[0] > 0 else 0.0
    hit = np.flatnonzero(e <= floor)
    usable = e[: hit[0]] if hit.size else e
    if hit.size and usable.size < 4:
        return RateClass("Finite", bound=_bound(e[: hit[0] + 1]))
    if usable.size < 4:
        raise InsufficientData(f"{usable.size} usable error values")
    width = max(5, math.ceil(0.2 * usable.size))
    win = usable[-width:]
    r = win[1:] / win[:-1]
    q = win[1:] / win[:-1] ** 2
    decreasing = bool(np.all(np.diff(r) < 0))
    if decreasing and r[-1] < 1 and q.max() <= growth * q[0]:
        return RateClass("Quadratic", bound=float(q.max()))
    if decreasing and r[-1] < 0.1:
        return RateClass("Superlinear")
    mu = float(np.median(r))
    if mu < 1 and np.all(np.abs(r - mu) <= 0.1):
        return RateClass("Linear", mu=mu)
    return RateClass("Sublinear", mu=mu)


def _bound(e):
    q = squared_ratios(e)
    return float(q.max()) if q.size else 0.0


def classify_rate(trace, x_star, **kwargs):
    """Classify the rate of ``trace`` toward ``x_star``.

    See :func:`classify_errors` for the rules.
    """
    x_star = np.asarray(x_star, dtype=float)
    errors = [float(np.linalg.norm(r.x - x_star)) for r in trace.records]
    return classify_errors(errors, **kwargs)


@dataclass
class RunResult:
    """Outcome of one solver run as consumed by :func:`summarize`."""

    instance_id: str
    seed: int
    solver: str
    status: str
    final_phi: float
    iters: int
    backtracks: int
    value: float
    rate: Optional[RateClass] = None
    wall_ns: int = 0


SUMMARY_COLUMNS = ["instance_id", "seed", "solver", "final_phi", "iters", "backtracks",
                   "rate_class", "mu", "status", "value"]


def _rate_fields(rate):
    if rate is None:
        return "", ""
    return rate.kind, "" if rate.mu is None else repr(rate.mu)


def summarize(results, reference=None, tol=1e-6):
    """Aggregate run results.

    Parameters
    ----------
    results : list of RunResult
    reference : str, optional
        Solver the others are compared against.
    tol : float
        Values within ``tol`` count as ties.

    Returns
    -------
    rows : list of dict
        One row per run, sorted by ``(instance_id, solver)``.
    comparisons : dict
        ``solver -> {"lower", "higher", "tie"}`` counts of that solver's
        value relative to ``reference``.

    Raises
    ------
    KeyMismatch
        If the solvers do not cover the same instances.
    """
    by_solver = {}
    for res in results:
        by_solver.setdefault(res.solver, {})[res.instance_id] = res
    keys = None
    for solver, runs in sorted(by_solver.items()):
        if keys is None:
            keys = set(runs)
        elif set(runs) != keys:
            missing = sorted(keys.symmetric_difference(runs))
            raise KeyMismatch(f"solver {solver!r} differs on instances {missing[:5]}")
    rows = []
    for res in sorted(results, key=lambda r: (r.instance_id, r.solver)):
        kind, mu = _rate_fields(res.rate)
        rows.append({"instance_id": res.instance_id, "seed": res.seed, "solver": res.solver,
                     "final_phi": repr(float(res.final_phi)), "iters": res.iters,
                     "backtracks": res.backtracks, "rate_class": kind, "mu": mu,
                     "status": res.status, "value": repr(float(res.value))})
    comparisons = compare(by_solver, reference, tol) if reference else {}
    return rows, comparisons


def compare(by_solver, reference, tol=1e-6):
    """Lower/higher/tie counts of each solver's value against ``reference``."""
    if reference not in by_solver:
        raise KeyMismatch(f"reference solver {reference!r} absent")
    ref = by_solver[reference]
    out = {}
    for solver, runs in sorted(by_solver.items()):
        if solver == reference:
            continue
        counts = {"lower": 0, "higher": 0, "tie": 0}
        for key, res in runs.items():
            gap = res.value - ref[key].value
            if gap < -tol:
                counts["lower"] += 1
            elif gap > tol:
                counts["higher"] += 1
            else:
                counts["tie"] += 1
        out[solver] = counts
    return out


def summary_csv(rows):
    """CSV text of summary rows with a fixed column order."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
