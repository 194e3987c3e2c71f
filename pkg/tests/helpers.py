"""Shared test utilities: independent oracles and fixture generators.

Everything here is deliberately naive (grids, rejection sampling, closed
forms) so that agreement with the library is evidence, not tautology.
"""

from __future__ import annotations

import math

import numpy as np

from covbody.measure import WeightedMeasure
from covbody.polytope import Polytope


def grid_covariogram(K: Polytope, mu: WeightedMeasure, shifts,
                     level: int = 200) -> float:
    """Covariogram by midpoint-grid integration over K's bounding box.

    Independent of the library's vertex-based integration: evaluates the
    indicator of K cap_i (x_i + K) and the density on a level^n grid.
    """
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    lo, hi = K.bounding_box()
    axes = [np.linspace(lo[j] + 0.5 * (hi[j] - lo[j]) / level,
                        hi[j] - 0.5 * (hi[j] - lo[j]) / level, level)
            for j in range(K.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    cell = np.prod((hi - lo) / level)
    ok = (pts @ K.A.T <= K.b[None, :] + 1e-12).all(axis=1)
    for sh in shifts:
        ok &= ((pts - sh) @ K.A.T <= K.b[None, :] + 1e-12).all(axis=1)
    if not ok.any():
        return 0.0
    return float(mu.density(pts[ok]).sum() * cell)


def gauss_box_mass(sigma: float, lo, hi) -> float:
    """int over the box of exp(-|x|^2 / (2 sigma^2)), as a 1-D erf product."""
    total = 1.0
    for a, b in zip(np.atleast_1d(lo), np.atleast_1d(hi)):
        total *= sigma * math.sqrt(math.pi / 2.0) * (
            math.erf(b / (sigma * math.sqrt(2))) -
            math.erf(a / (sigma * math.sqrt(2))))
    return total


def random_polytope(rng: np.random.Generator, dim: int,
                    npoints: int = 12) -> Polytope:
    """Convex hull of random points; guaranteed full-dimensional."""
    while True:
        pts = rng.uniform(-1.0, 1.0, size=(npoints, dim))
        try:
            P = Polytope.from_vertices(pts)
        except Exception:
            continue
        if P.volume > 1e-3:
            return P


def exit_length_square(x: np.ndarray, theta: np.ndarray) -> float:
    """rho_{[0,1]^2 - x}(-theta): exit length of the ray x - t theta, t >= 0."""
    t = math.inf
    for j in range(2):
        if theta[j] > 1e-15:
            t = min(t, x[j] / theta[j])
        elif theta[j] < -1e-15:
            t = min(t, (x[j] - 1.0) / theta[j])
    return t
