"""Nearest furthest-neighbor distance over uncertain point sets.

Set i contributes f_i(q) = max distance from q to its points: the worst-case
travel to reach the i'th (uncertain) site.  Each input set is reduced once at
ingestion to a grid-representative subset whose furthest-neighbor function
approximates the original within (1 + eps/4); the family then works with the
reduced sets exactly.  Sublevel sets are intersections of balls, so grid
covers use evaluated cell centers with an additive slack instead of an exact
predicate.
"""

from __future__ import annotations

import math

import numpy as np

from ..family import DistanceFamily, Sketch
from ..geometry import ball_cover_arrays
from ..meb import meb_coreset, minidisk

SKETCH_Y0_MULTIPLIER = 4.0


def reduce_point_set(points: np.ndarray, eps: float, center: np.ndarray, radius: float) -> np.ndarray:
    """Grid-representative subset S with F_S <= F_P <= (1 + eps/4) F_S.

    All points live inside the enclosing ball, so a single grid of cell
    diameter (eps/8) * radius suffices: snapping moves any point by at most
    that, and F is 1-Lipschitz in each site while F >= radius everywhere.
    """
    if radius <= 0.0 or len(points) == 1:
        return points[:1].copy()
    d = points.shape[1]
    side = (eps / 8.0) * radius / math.sqrt(d)
    keys = np.floor((points - center) / side).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)].copy()


class NearestFurthestFamily(DistanceFamily):
    def __init__(self, point_sets, eps: float):
        if not point_sets:
            raise ValueError("need at least one uncertain set")
        if not (0.0 < eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")
        self.eps = float(eps)
        self.mu = eps * eps / 144.0
        sets = [np.asarray(p, dtype=np.float64) for p in point_sets]
        if any(s.ndim != 2 or len(s) == 0 for s in sets):
            raise ValueError("every uncertain set must be a non-empty (m, d) array")
        self.dim = sets[0].shape[1]
        if any(s.shape[1] != self.dim for s in sets):
            raise ValueError("uncertain sets must share one dimension")

        self.full_sets = sets
        self.centers = np.zeros((len(sets), self.dim))  # approximate MEB centers u'
        self.radii = np.zeros(len(sets))  # approximate MEB radii z'
        self.coresets: list[list[int]] = []
        self.reduced: list[np.ndarray] = []
        self._thresholds = np.zeros(len(sets))
        self._anchors = np.zeros((len(sets), self.dim))
        for i, pts in enumerate(sets):
            c, r, core = meb_coreset(pts, self.mu) if len(pts) > 1 else (pts[0].copy(), 0.0, [0])
            self.centers[i] = c
            self.radii[i] = r
            self.coresets.append(core)
            s = reduce_point_set(pts, self.eps, c, r / (1.0 + self.mu))
            self.reduced.append(s)
            u_s, z_s = minidisk(s)
            self._anchors[i] = u_s
            self._thresholds[i] = z_s

        smax = max(len(s) for s in self.reduced)
        self._pad = np.zeros((len(sets), smax, self.dim))
        self._mask = np.zeros((len(sets), smax), dtype=bool)
        for i, s in enumerate(self.reduced):
            self._pad[i, : len(s)] = s
            self._pad[i, len(s) :] = s[0]  # padding repeats a real point
            self._mask[i, : len(s)] = True
        all_pts = np.concatenate(self.reduced)
        self._bbox_lo = all_pts.min(axis=0)
        self._bbox_hi = all_pts.max(axis=0)
        self._pair_cache: dict[tuple[int, int], float] = {}

    def size(self) -> int:
        return len(self.reduced)

    # -- evaluation ----------------------------------------------------------

    def eval_one(self, i, q) -> float:
        q = np.asarray(q, dtype=np.float64)
        return float(np.max(np.linalg.norm(self.reduced[i] - q, axis=1)))

    def eval_full(self, i, q) -> float:
        """Furthest distance over the original (unreduced) set."""
        q = np.asarray(q, dtype=np.float64)
        return float(np.max(np.linalg.norm(self.full_sets[i] - q, axis=1)))

    def eval_subset(self, ids, q) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        q = np.asarray(q, dtype=np.float64)
        diff = self._pad[ids] - q[None, None, :]
        return np.sqrt(np.max(np.sum(diff * diff, axis=2), axis=1))

    # -- framework capabilities ----------------------------------------------

    def growth(self, i, y) -> float:
        return float(y)

    def growth_constant(self) -> float:
        return 2.0

    def sketch_constant(self) -> int:
        return self.dim

    def sublevel_threshold(self, i) -> float:
        return float(self._thresholds[i])

    def pairwise_sep(self, i, j) -> float:
        key = (min(i, j), max(i, j))
        got = self._pair_cache.get(key)
        if got is None:
            merged = np.concatenate([self.reduced[key[0]], self.reduced[key[1]]])
            _, got = minidisk(merged)
            self._pair_cache[key] = float(got)
        return got

    def pairwise_sep_via_coresets(self, i, j) -> float:
        """Merged-coreset estimate of the pair separation, within (1 + 2 mu)."""
        pts = np.concatenate(
            [self.full_sets[i][self.coresets[i]], self.full_sets[j][self.coresets[j]]]
        )
        _, r, _ = meb_coreset(pts, 2.0 * self.mu) if len(pts) > 1 else (pts[0], 0.0, [0])
        return float(r)

    def sublevels_intersect(self, i, j, y) -> bool:
        return self.pairwise_sep(i, j) <= y

    def cover_with_rungs(self, i, level, ys, rs):
        y_top, r_top = float(ys[-1]), float(rs[-1])
        anchor = self._anchors[i]
        idx, _ = ball_cover_arrays(anchor, y_top + r_top, level)
        if len(idx) == 0:
            return idx, np.zeros(0, dtype=np.int32)
        side = math.ldexp(1.0, -level)
        centers = np.ldexp(idx.astype(np.float64), -level) + side / 2.0
        diff = centers[:, None, :] - self.reduced[i][None, :, :]
        fc = np.sqrt(np.max(np.sum(diff * diff, axis=2), axis=1))
        cut = np.asarray(ys, dtype=np.float64) + np.asarray(rs, dtype=np.float64) / 2.0
        first = np.searchsorted(cut * (1 + 1e-12), fc, side="left").astype(np.int32)
        keep = first < len(ys)
        return idx[keep], first[keep]

    def sketch(self, ids, delta, cr_bound=None) -> Sketch:
        ids = sorted(int(v) for v in ids)
        if not ids:
            raise ValueError("cannot sketch an empty id set")
        if delta <= 0:
            raise ValueError("delta must be positive")
        if len(ids) == 1:
            return Sketch((ids[0],), delta, 0.0)
        cr = self.exact_cr(ids) if cr_bound is None else float(cr_bound)
        y0 = SKETCH_Y0_MULTIPLIER * len(ids) * cr / delta
        return Sketch((ids[0],), delta, y0)

    def sketch_y0_multiplier(self) -> float:
        return SKETCH_Y0_MULTIPLIER

    def sublevel_seed_point(self, i) -> np.ndarray:
        return self._anchors[i].copy()

    def global_value_lower_bound(self, q) -> float:
        q = np.asarray(q, dtype=np.float64)
        gap = np.linalg.norm(q - np.clip(q, self._bbox_lo, self._bbox_hi))
        return float(gap)

    def value_bounds_on_box(self, ids, lo, hi):
        ids = np.asarray(ids, dtype=np.int64)
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        d = self.dim
        corners = np.stack(
            [np.where([(c >> a) & 1 for a in range(d)], hi, lo) for c in range(1 << d)]
        )
        lbs = np.zeros(len(ids))
        ubs = np.zeros(len(ids))
        for k, i in enumerate(ids):
            s = self.reduced[int(i)]
            near = np.clip(s, lo, hi)
            lbs[k] = float(np.max(np.sqrt(np.sum((near - s) ** 2, axis=1))))
            diff = corners[:, None, :] - s[None, :, :]
            # furthest-distance is convex, so the box max sits at a corner
            ubs[k] = float(np.max(np.sqrt(np.sum(diff * diff, axis=2))))
        return lbs, ubs
