"""Brute-force reference computations used by tests and self-checks.

Nothing here is on a query hot path; clarity and independence from the
structures under test matter more than speed.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .family import DistanceFamily

EXACT_SET_GUARD = 1 << 10
MEB_GUARD = 64


def exact_min(family: DistanceFamily, q) -> tuple[int, float]:
    """Linear-scan minimization diagram value; ties go to the smaller id."""
    vals = family.eval_all(np.asarray(q, dtype=np.float64))
    i = int(np.argmin(vals))  # argmin returns the first (smallest id) minimum
    return i, float(vals[i])


def bisect_sep(family: DistanceFamily, i: int, j: int, tol: float | None = None) -> float:
    """Pair separation by bisection on the sublevel-intersection predicate.

    The default tolerance is 1e-7 times the bracket scale (a stand-in for
    the instance diameter)."""
    lo = max(family.sublevel_threshold(i), family.sublevel_threshold(j))
    hi = max(lo, 1e-6)
    for _ in range(200):
        if family.sublevels_intersect(i, j, hi):
            break
        hi *= 2.0
    else:
        raise RuntimeError("bisection bracket failure: sublevels never meet")
    if tol is None:
        tol = 1e-7 * hi
    if tol <= 0:
        raise ValueError("tol must be positive")
    if family.sublevels_intersect(i, j, lo):
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if family.sublevels_intersect(i, j, mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def exact_ccs(family: DistanceFamily, ids, level: float) -> list[tuple[int, ...]]:
    """Exact level clustering: union pairs whose separation is <= level."""
    ids = sorted(int(v) for v in ids)
    if len(ids) > EXACT_SET_GUARD:
        raise ValueError(f"exact clustering refused beyond {EXACT_SET_GUARD} ids")
    parent = {i: i for i in ids}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a_idx, a in enumerate(ids):
        if family.sublevel_threshold(a) > level:
            continue
        for b in ids[a_idx + 1 :]:
            if family.sublevel_threshold(b) > level:
                continue
            if family.pairwise_sep(a, b) <= level:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for i in ids:
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(sorted(g)) for g in groups.values())


def exact_cr(family: DistanceFamily, ids) -> float:
    """Connectivity level: the longest edge of an MST over pair separations."""
    ids = sorted(int(v) for v in ids)
    if len(ids) > EXACT_SET_GUARD:
        raise ValueError(f"exact connectivity refused beyond {EXACT_SET_GUARD} ids")
    return family.exact_cr(ids)


def exact_meb(points, seed: int = 17) -> tuple[np.ndarray, float]:
    """Exact minimum enclosing ball via recursive Welzl (<= 64 points).

    Independent of genvor.meb.minidisk: plain recursion on python lists with
    its own basis solver, used as the dual-route check.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    if len(pts) > MEB_GUARD:
        raise ValueError(f"exact_meb guard: more than {MEB_GUARD} points")
    d = len(pts[0])
    rnd = random.Random(seed)
    rnd.shuffle(pts)
    scale = max(1.0, max(float(np.abs(p).max()) for p in pts))
    tol = 1e-10 * scale

    def ball_of(basis):
        if not basis:
            return None
        if len(basis) == 1:
            return basis[0], 0.0
        p0 = basis[0]
        rows = [2.0 * (p - p0) for p in basis[1:]]
        rhs = [float((p - p0) @ (p - p0)) for p in basis[1:]]
        shift, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        c = p0 + shift
        return c, max(float(np.linalg.norm(p - c)) for p in basis)

    def welzl(items, basis):
        if not items or len(basis) == d + 1:
            return ball_of(basis)
        p = items[0]
        ball = welzl(items[1:], basis)
        if ball is not None and np.linalg.norm(p - ball[0]) <= ball[1] + tol:
            return ball
        return welzl(items[1:], basis + [p])

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * len(pts) + 1000))
    try:
        center, radius = welzl(pts, [])
    finally:
        sys.setrecursionlimit(old)
    return center, radius


def meb_certificate_ok(points, center, radius, tol: float = 1e-7, dirs: int = 600) -> bool:
    """Optimality check: the ball covers the set and no direction admits a
    strictly smaller one, i.e. every sampled half-space through the center
    keeps some boundary point on its far side."""
    pts = np.asarray(points, dtype=np.float64)
    dist = np.linalg.norm(pts - center, axis=1)
    if np.any(dist > radius * (1 + tol) + tol):
        return False
    on_boundary = pts[dist >= radius * (1 - 1e-6) - tol]
    if len(on_boundary) == 0:
        return radius <= tol
    rel = on_boundary - center
    rnd = np.random.default_rng(7)
    d = pts.shape[1]
    dirs_arr = rnd.normal(size=(dirs, d))
    dirs_arr /= np.linalg.norm(dirs_arr, axis=1, keepdims=True)
    support = (dirs_arr @ rel.T).max(axis=1)
    return bool(np.all(support >= -tol * max(1.0, radius)))
