"""Quadrature helpers: Gauss-Legendre rules, graded maps, simplex rules.

All deterministic. Rules are cached by node count.
"""

from __future__ import annotations

import functools

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InputError, NumericError


@functools.lru_cache(maxsize=64)
def gauss_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = leggauss(int(n))
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_interval(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [a, b]."""
    u, w = gauss_01(n)
    return a + (b - a) * u, (b - a) * w


def graded_gauss(rho: float, n: int, power: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [0, rho] graded toward 0 via r = rho * u^power.

    Clusters nodes near r = 0 so integrands with an integrable r^p
    (p > -1) endpoint singularity are resolved after the change of
    variables; weights absorb the Jacobian rho * power * u^(power-1).
    """
    if rho <= 0:
        raise InputError(f"graded_gauss needs rho > 0, got {rho}")
    u, w = gauss_01(n)
    r = rho * u**power
    dr = rho * power * u ** (power - 1) * w
    return r, dr


def simplex_rule(verts: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule collapsed onto a simplex (dim 1, 2 or 3).

    verts has shape (dim+1, dim). Returns points (Q, dim) and weights
    summing to the simplex volume. The collapsed (Duffy) map keeps
    Gauss-order accuracy for smooth integrands.
    """
    verts = np.asarray(verts, dtype=float)
    dim = verts.shape[1]
    if verts.shape[0] != dim + 1:
        raise InputError("simplex_rule expects dim+1 vertices")
    u, w = gauss_01(level)
    if dim == 1:
        pts = verts[0] + u[:, None] * (verts[1] - verts[0])
        return pts, w * abs(verts[1, 0] - verts[0, 0])
    if dim == 2:
        t1, t2 = np.meshgrid(u, u, indexing="ij")
        w12 = np.outer(w, w)
        p = (
            verts[0]
            + t1[..., None] * (verts[1] - verts[0])
            + (t1 * t2)[..., None] * (verts[2] - verts[1])
        )
        area2 = abs(np.linalg.det(np.stack([verts[1] - verts[0], verts[2] - verts[0]])))
        wt = w12 * t1 * area2
        return p.reshape(-1, 2), wt.ravel()
    if dim == 3:
        t1, t2, t3 = np.meshgrid(u, u, u, indexing="ij")
        w123 = w[:, None, None] * w[None, :, None] * w[None, None, :]
        p = (
            verts[0]
            + t1[..., None] * (verts[1] - verts[0])
            + (t1 * t2)[..., None] * (verts[2] - verts[1])
            + (t1 * t2 * t3)[..., None] * (verts[3] - verts[2])
        )
        vol6 = abs(np.linalg.det(verts[1:] - verts[0]))
        wt = w123 * t1 * t1 * t2 * vol6
        return p.reshape(-1, 3), wt.ravel()
    raise InputError(f"simplex_rule supports dim <= 3, got {dim}")


def order_polygon(pts: np.ndarray) -> np.ndarray:
    """Order 2-D points counterclockwise around their mean."""
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    return pts[np.argsort(ang, kind="stable")]


def triangulate_vertices(dim: int, pts: np.ndarray) -> list[np.ndarray]:
    """Split the convex hull of pts into simplices sharing the vertex mean.

    Returns a list of (dim+1, dim) vertex arrays. Raises NumericError if the
    point set is degenerate (lower-dimensional hull).
    """
    pts = np.asarray(pts, dtype=float)
    if dim == 1:
        lo, hi = pts.min(), pts.max()
        if hi - lo <= 0:
            raise NumericError("degenerate 1-d point set")
        return [np.array([[lo], [hi]])]
    if dim == 2:
        if len(pts) < 3:
            raise NumericError("degenerate 2-d point set")
        ring = order_polygon(pts)
        c = ring.mean(axis=0)
        tris = []
        for i in range(len(ring)):
            a, b = ring[i], ring[(i + 1) % len(ring)]
            u, v = a - c, b - c
            if abs(u[0] * v[1] - u[1] * v[0]) > 1e-14:
                tris.append(np.array([c, a, b]))
        if not tris:
            raise NumericError("degenerate 2-d point set")
        return tris
    if dim == 3:
        from scipy.spatial import ConvexHull, QhullError

        if len(pts) < 4:
            raise NumericError("degenerate 3-d point set")
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise NumericError(f"degenerate 3-d point set: {exc}") from exc
        c = pts[hull.vertices].mean(axis=0)
        tets = []
        for simp in hull.simplices:
            tri = pts[simp]
            vol6 = abs(np.linalg.det(tri - c))
            if vol6 > 1e-14:
                tets.append(np.vstack([c[None, :], tri]))
        if not tets:
            raise NumericError("degenerate 3-d point set")
        return tets
    raise InputError(f"triangulate_vertices supports dim <= 3, got {dim}")
