"""Minimum enclosing balls: exact solver and iterative coresets."""

from __future__ import annotations

import math

import numpy as np


def circumball(boundary: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Smallest ball with the given (affinely independent) points on its
    boundary.  Solved relative to the first point so the least-norm solution
    stays in the points' affine hull (degenerate inputs stay harmless)."""
    if not boundary:
        return np.zeros(1), -1.0
    p0 = boundary[0]
    if len(boundary) == 1:
        return p0.copy(), 0.0
    rows = np.array([2.0 * (p - p0) for p in boundary[1:]])
    rhs = np.array([float((p - p0) @ (p - p0)) for p in boundary[1:]])
    shift, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    center = p0 + shift
    radius = max(float(np.linalg.norm(p - center)) for p in boundary)
    return center, radius


def minidisk(points, rng=None) -> tuple[np.ndarray, float]:
    """Exact minimum enclosing ball (Welzl-style incremental, d <= 4ish)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a non-empty (m, d) point array")
    rng = np.random.default_rng(0x5EED) if rng is None else rng
    order = rng.permutation(len(pts))
    pts = pts[order]
    d = pts.shape[1]
    tol = 1e-10 * (1.0 + float(np.abs(pts).max()))

    def grow(prefix: np.ndarray, boundary: list[np.ndarray]) -> tuple[np.ndarray, float]:
        center, radius = circumball(boundary)
        if len(boundary) == d + 1:
            return center, radius
        for t in range(len(prefix)):
            p = prefix[t]
            if radius < 0 or np.linalg.norm(p - center) > radius + tol:
                center, radius = grow(prefix[:t], boundary + [p])
        return center, radius

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, len(pts) * (d + 2) + 100))
    try:
        center, radius = grow(pts, [])
    finally:
        sys.setrecursionlimit(old)
    return center, max(radius, 0.0)


def meb_coreset(points, mu: float, rng=None, max_iters: int = 4096):
    """Iterative farthest-point coreset for the minimum enclosing ball.

    Returns (center, radius, coreset_indices) with radius <= (1+mu) * exact.
    The loop stops once the picked coreset certifies the bound: the max
    distance from the running center is within (1+mu/4) of the coreset's own
    exact MEB radius, which lower-bounds the full set's.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a non-empty (m, d) point array")
    if not (0.0 < mu < 1.0):
        raise ValueError("mu must lie in (0, 1)")
    if len(pts) == 1:
        return pts[0].copy(), 0.0, [0]

    budget = min(max_iters, math.ceil(2.0 / mu) + 1)
    far0 = int(np.argmax(np.sum((pts - pts[0]) ** 2, axis=1)))
    center = pts[far0].astype(np.float64).copy()
    core = [far0]
    best = None
    for k in range(1, budget + 1):
        dist = np.sqrt(np.sum((pts - center) ** 2, axis=1))
        far = int(np.argmax(dist))
        if far not in core:
            core.append(far)
        if len(core) >= 2 and (k % 4 == 0 or k <= 8):
            # certified stop: the coreset's own ball, expanded by (1+mu/4),
            # already covers the whole set
            u_c, r_core = minidisk(pts[core])
            reach = float(np.max(np.sqrt(np.sum((pts - u_c) ** 2, axis=1))))
            if best is None or reach < best[1]:
                best = (u_c, reach)
            if reach <= (1.0 + mu / 4.0) * r_core:
                break
        center += (pts[far] - center) / (k + 1.0)
    if best is None:
        u_c, _ = minidisk(pts[core])
        best = (u_c, float(np.max(np.sqrt(np.sum((pts - u_c) ** 2, axis=1)))))
    return best[0], best[1], sorted(set(core))
