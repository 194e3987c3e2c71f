"""Independent brute-force estimators: sphere quadratures and MC measures.

These are the ground-truth tools the rest of the package is validated
against, so they stay deliberately simple. All randomness flows through
numpy Generators seeded from (seed, tag) pairs; reductions are plain numpy
sums over fixed shapes, so results are bit-identical across runs and thread
counts.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._special import sphere_area
from .errors import InputError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def rng_for(seed: int, tag: str) -> np.random.Generator:
    """Deterministic per-operation generator derived from (seed, tag)."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((int(seed), zlib.crc32(tag.encode())))))


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes/weights on S^(d-1); weights sum to the sphere measure."""

    dim: int
    nodes: np.ndarray  # (N, d) unit vectors
    weights: np.ndarray  # (N,)
    kind: str

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))


def sphere_quadrature(d: int, kind: str = "auto", count: int = 1000,
                      seed: int = 42) -> SphereQuadrature:
    """Quadrature rule on S^(d-1).

    d=2: midpoint rule on the angle (spectrally accurate for smooth and
    excellent for piecewise-smooth integrands); d=3: spherical Fibonacci;
    d>=4: seeded normalized gaussians with equal weights |S^(d-1)|/count.
    """
    if d < 2:
        raise InputError(f"sphere quadrature needs d >= 2, got {d}")
    if kind == "auto":
        kind = "angular" if d == 2 else ("fibonacci" if d == 3 else "mc")
    if kind == "angular":
        if d != 2:
            raise InputError("angular quadrature is 2-d only")
        ang = (np.arange(count) + 0.5) * (2.0 * math.pi / count)
        nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        weights = np.full(count, 2.0 * math.pi / count)
        return SphereQuadrature(2, nodes, weights, "angular")
    if kind == "fibonacci":
        if d != 3:
            raise InputError("fibonacci quadrature is 3-d only")
        i = np.arange(count, dtype=float)
        z = 1.0 - (2.0 * i + 1.0) / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = GOLDEN_ANGLE * i
        nodes = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        weights = np.full(count, sphere_area(3) / count)
        return SphereQuadrature(3, nodes, weights, "fibonacci")
    if kind == "mc":
        rng = rng_for(seed, f"sphere-mc-d{d}")
        raw = rng.standard_normal((count, d))
        nodes = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        weights = np.full(count, sphere_area(d) / count)
        return SphereQuadrature(d, nodes, weights, f"mc(seed={seed})")
    raise InputError(f"unknown sphere quadrature kind {kind!r}")


def mc_measure(density: Callable[[np.ndarray], np.ndarray],
               membership: Callable[[np.ndarray], np.ndarray],
               box: tuple[Sequence[float], Sequence[float]],
               n_samples: int = 100_000, seed: int = 42,
               tag: str = "mc-measure") -> tuple[float, float]:
    """Rejection estimate of int phi * chi over the box: (estimate, stderr)."""
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if (hi <= lo).any():
        raise InputError("empty bounding box")
    rng = rng_for(seed, tag)
    X = lo + (hi - lo) * rng.random((int(n_samples), len(lo)))
    inside = np.asarray(membership(X), dtype=bool)
    vals = np.where(inside, np.asarray(density(X), dtype=float), 0.0)
    boxvol = float(np.prod(hi - lo))
    est = boxvol * float(vals.mean())
    se = boxvol * float(vals.std(ddof=1)) / math.sqrt(len(vals))
    return est, se
