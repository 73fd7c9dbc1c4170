"""Multiplicatively weighted points with additive offsets.

Site i with weight w_i > 0 and offset a_i >= 0 induces
f_i(q) = w_i * ||q - p_i|| + a_i.  Sublevel sets are balls (empty below the
offset), so everything here has a closed form.
"""

from __future__ import annotations

import math

import numpy as np

from ..family import DistanceFamily, Sketch, first_rung_indices
from ..geometry import ball_cover_arrays

GROWTH_CONSTANT = 2.0
SKETCH_Y0_MULTIPLIER = 3.0


class MultOffsetFamily(DistanceFamily):
    def __init__(self, points, weights=None, offsets=None):
        self.points = np.asarray(points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        n, d = self.points.shape
        self.weights = (
            np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        )
        self.offsets = (
            np.zeros(n) if offsets is None else np.asarray(offsets, dtype=np.float64)
        )
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if np.any(self.offsets < 0):
            raise ValueError("offsets must be non-negative")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("site coordinates must be finite")
        self.dim = d
        self._bbox_lo = self.points.min(axis=0)
        self._bbox_hi = self.points.max(axis=0)

    def size(self) -> int:
        return len(self.points)

    # -- evaluation ----------------------------------------------------------

    def eval_one(self, i, q) -> float:
        q = np.asarray(q, dtype=np.float64)
        return float(self.weights[i] * np.linalg.norm(q - self.points[i]) + self.offsets[i])

    def eval_subset(self, ids, q) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        q = np.asarray(q, dtype=np.float64)
        d = np.sqrt(np.sum((self.points[ids] - q) ** 2, axis=1))
        return self.weights[ids] * d + self.offsets[ids]

    # -- framework capabilities ----------------------------------------------

    def growth(self, i, y) -> float:
        return max(0.0, (y - self.offsets[i]) / self.weights[i])

    def growth_constant(self) -> float:
        return GROWTH_CONSTANT

    def sketch_constant(self) -> int:
        return self.dim

    def sublevel_threshold(self, i) -> float:
        return float(self.offsets[i])

    def pairwise_sep(self, i, j) -> float:
        wi, wj = self.weights[i], self.weights[j]
        ai, aj = self.offsets[i], self.offsets[j]
        dist = float(np.linalg.norm(self.points[i] - self.points[j]))
        touch = dist * wi * wj / (wi + wj) + (ai * wj + aj * wi) / (wi + wj)
        return float(max(max(ai, aj), touch))

    def sublevels_intersect(self, i, j, y) -> bool:
        if y < self.offsets[i] or y < self.offsets[j]:
            return False
        ri = (y - self.offsets[i]) / self.weights[i]
        rj = (y - self.offsets[j]) / self.weights[j]
        return float(np.linalg.norm(self.points[i] - self.points[j])) <= ri + rj

    def cover_with_rungs(self, i, level, ys, rs):
        radius = (ys[-1] - self.offsets[i]) / self.weights[i]
        if radius < 0:
            return np.zeros((0, self.dim), dtype=np.int64), np.zeros(0, dtype=np.int32)
        idx, dist = ball_cover_arrays(self.points[i], float(radius), level)
        reach = self.weights[i] * dist + self.offsets[i]
        return idx, first_rung_indices(ys, reach)

    def sketch(self, ids, delta, cr_bound=None) -> Sketch:
        ids = sorted(int(i) for i in ids)
        if not ids:
            raise ValueError("cannot sketch an empty id set")
        if delta <= 0:
            raise ValueError("delta must be positive")
        if len(ids) == 1:
            return Sketch((ids[0],), delta, 0.0)
        pick = min(ids, key=lambda i: (self.weights[i], i))
        cr = self.exact_cr(ids) if cr_bound is None else float(cr_bound)
        y0 = SKETCH_Y0_MULTIPLIER * cr * len(ids) / delta
        return Sketch((pick,), delta, y0)

    def sketch_y0_multiplier(self) -> float:
        return SKETCH_Y0_MULTIPLIER

    def sublevel_seed_point(self, i) -> np.ndarray:
        return self.points[i].copy()

    def global_value_lower_bound(self, q) -> float:
        q = np.asarray(q, dtype=np.float64)
        gap = np.linalg.norm(q - np.clip(q, self._bbox_lo, self._bbox_hi))
        return float(self.weights.min() * gap + self.offsets.min())

    def value_bounds_on_box(self, ids, lo, hi):
        ids = np.asarray(ids, dtype=np.int64)
        p = self.points[ids]
        near = np.clip(p, lo, hi)
        dmin = np.sqrt(np.sum((near - p) ** 2, axis=1))
        far = np.maximum(np.abs(p - lo), np.abs(hi - p))
        dmax = np.sqrt(np.sum(far**2, axis=1))
        return (
            self.weights[ids] * dmin + self.offsets[ids],
            self.weights[ids] * dmax + self.offsets[ids],
        )

    def rung_representatives(self, ids: np.ndarray, y: float, tol: float) -> np.ndarray:
        """Subset R of ids such that every dropped f has a representative g
        with g(q) <= f(q) + tol wherever f(q) <= 4y.

        Sites are bucketed on a grid, weights on a geometric scale and
        offsets additively, each contributing at most tol/3 of value error at
        scale 4y; one member per bucket (the smallest id, which is first in
        the sorted input) represents the rest.
        """
        ids = np.asarray(ids, dtype=np.int64)
        if tol <= 0 or len(ids) <= 8:
            return ids
        w = self.weights[ids]
        # distance at value 4y is at most 4y/w, so a relative weight jitter
        # of tol/(12 y) keeps the weight term under tol/3
        ratio = np.log1p(tol / (12.0 * max(y, 1e-300)))
        w_bucket = np.floor(np.log(w) / ratio).astype(np.int64)
        a_bucket = np.floor(self.offsets[ids] / (tol / 3.0)).astype(np.int64)
        # grid spacing derived from the bucketed weight so that members of a
        # bucket share one grid
        wq = np.exp((w_bucket + 1).astype(np.float64) * ratio)
        spacing = tol / (3.0 * np.sqrt(self.dim) * wq)
        site_bucket = np.floor(self.points[ids] / spacing[:, None]).astype(np.int64)
        keys = np.concatenate([site_bucket, w_bucket[:, None], a_bucket[:, None]], axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        return ids[np.sort(first)]

    def sep_min_between(self, ids_a, ids_b) -> tuple[float, int, int]:
        """Vectorized min pair separation with the (value, min, max) order."""
        a = np.asarray(list(ids_a), dtype=np.int64)
        b = np.asarray(list(ids_b), dtype=np.int64)
        dist = np.sqrt(
            np.sum((self.points[a][:, None, :] - self.points[b][None, :, :]) ** 2, axis=2)
        )
        wa, wb = self.weights[a][:, None], self.weights[b][None, :]
        oa, ob = self.offsets[a][:, None], self.offsets[b][None, :]
        sep = np.maximum(
            np.maximum(oa, ob), dist * wa * wb / (wa + wb) + (oa * wb + ob * wa) / (wa + wb)
        )
        flat = int(np.argmin(sep))
        val = float(sep.flat[flat])
        ties = np.argwhere(sep <= val)
        best = min(
            (min(int(a[i]), int(b[j])), max(int(a[i]), int(b[j]))) for i, j in ties
        )
        return val, best[0], best[1]


def containment_threshold(family: MultOffsetFamily, i: int, j: int, delta: float) -> float:
    """Smallest y at which sublevel(j, y) fits inside sublevel(i, (1+delta)y),
    for w_i <= w_j.  Closed form used as a test boundary."""
    wi, wj = family.weights[i], family.weights[j]
    if wi > wj:
        raise ValueError("requires w_i <= w_j")
    ai, aj = family.offsets[i], family.offsets[j]
    dist = float(np.linalg.norm(family.points[i] - family.points[j]))
    denom = (1.0 + delta) / wi - 1.0 / wj
    return (dist + ai / wi - aj / wj) / denom


def ball_contained(center_in, r_in, center_out, r_out) -> bool:
    """Exact predicate: ball(center_in, r_in) inside ball(center_out, r_out)."""
    gap = float(np.linalg.norm(np.asarray(center_out) - np.asarray(center_in)))
    return gap + r_in <= r_out * (1 + 1e-12)
