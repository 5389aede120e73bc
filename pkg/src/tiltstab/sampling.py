"""Deterministic point sets used by every sampled probe."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, qmc


def halton(count: int, dim: int, skip: int = 1) -> np.ndarray:
    """First ``count`` Halton points in ``[0, 1)^dim`` after ``skip`` (unscrambled)."""
    if count <= 0 or dim <= 0:
        return np.zeros((max(count, 0), max(dim, 0)))
    sampler = qmc.Halton(d=dim, scramble=False)
    if skip:
        sampler.fast_forward(skip)
    return sampler.random(count)


def sphere_grid(count: int, dim: int) -> np.ndarray:
    """Roughly uniform unit vectors: circle angles, Fibonacci lattice, or Halton-Gaussian."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if dim == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5**0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    g = norm.ppf(np.clip(halton(count, dim), 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_points(count: int, dim: int) -> np.ndarray:
    """Low-discrepancy points in the closed unit ball (rejection from the cube)."""
    pts: list[np.ndarray] = []
    skip = 1
    while len(pts) < count:
        cube = 2 * halton(2 * count + 8, dim, skip) - 1
        skip += len(cube)
        pts.extend(p for p in cube if p @ p <= 1.0)
    return np.array(pts[:count]).reshape(count, dim)


def dyadic_axis_points(dim: int, radius: float, levels: int) -> np.ndarray:
    """Offsets ``+-radius / 2^k e_j`` for ``k < levels``, ordered by level then axis."""
    out = []
    for k in range(levels):
        t = radius / 2**k
        for j in range(dim):
            for sign in (1.0, -1.0):
                e = np.zeros(dim)
                e[j] = sign * t
                out.append(e)
    return np.array(out).reshape(-1, dim)
