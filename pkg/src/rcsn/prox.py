"""Projections and proximal maps with deterministic tie-breaking."""
from __future__ import annotations

import numpy as np

__all__ = [
    "project_ball",
    "project_box",
    "project_sphere",
    "project_finite",
    "nearest_lattice_center",
    "project_ball_union",
    "soft_threshold",
]


def project_ball(x, center, r):
    """Projection onto the closed ball ``B_r(center)``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    center = np.broadcast_to(np.asarray(center, dtype=float), x.shape)
    diff = x - center
    dist = np.linalg.norm(diff)
    if dist <= r:
        return x.copy()
    return center + (r / dist) * diff


def project_box(x, lower, upper):
    """Componentwise clip onto ``[lower, upper]``."""
    return np.clip(np.asarray(x, dtype=float), lower, upper)


def project_sphere(x, center=0.0, r=1.0):
    """Projection onto the sphere ``||z - center|| = r``.

    At the center every sphere point is nearest; the lexicographically
    smallest one, ``center - r e_1``, is returned.
    """
    x = np.asarray(x, dtype=float)
    center = np.broadcast_to(np.asarray(center, dtype=float), x.shape)
    diff = x - center
    scale = np.max(np.abs(diff)) if diff.size else 0.0
    if scale == 0:
        out = center.copy()
        out[0] -= r
        return out
    # rescale first: squaring tiny entries underflows and spoils the norm
    unit = diff / scale
    return center + (r / np.linalg.norm(unit)) * unit


def project_finite(x, candidates):
    """Nearest candidate point, lexicographically smallest on ties."""
    cands = np.atleast_2d(np.asarray(candidates, dtype=float))
    if cands.shape[0] == 0:
        raise ValueError("candidate set is empty")
    x = np.asarray(x, dtype=float).reshape(-1)
    if cands.shape[1] != x.size:
        cands = cands.reshape(-1, x.size)
    d2 = np.sum((cands - x) ** 2, axis=1)
    best = np.flatnonzero(d2 == d2.min())
    if best.size > 1:
        # np.lexsort sorts by the last key first
        order = np.lexsort(cands[best].T[::-1])
        return cands[best[order[0]]].copy()
    return cands[best[0]].copy()


def nearest_lattice_center(x, low=-4, high=4):
    """Nearest integer point of the box ``{low..high}^n``.

    Componentwise rounding with halves going to the smaller integer, then
    clamping to the box.
    """
    x = np.asarray(x, dtype=float)
    return np.clip(np.ceil(x - 0.5), low, high)


def project_ball_union(x, r, low=-4, high=4):
    """Projection onto the union of radius-``r`` balls centered at the
    integer points of ``{low..high}^n``.

    With equal radii the distance to a ball grows with the distance to its
    center, so the nearest ball is the one at the nearest lattice point.
    """
    return project_ball(x, nearest_lattice_center(x, low, high), r)


def soft_threshold(x, kappa):
    """Prox of ``kappa ||.||_1``: ``sign(x) max(|x| - kappa, 0)``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)
