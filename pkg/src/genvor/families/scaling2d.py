"""Scaling distances of star-shaped, rounded-fat polygons in the plane.

Body i is a simple polygon with a designated center in its kernel.  Its
distance to a query q is the smallest t with q inside the t-scaled copy of
the body about its center; sublevel sets are the scaled copies themselves.
Everything reduces to exact segment/ray algebra on the polygon edges.
"""

from __future__ import annotations

import math

import numpy as np

from ..family import DistanceFamily, Sketch, first_rung_indices
from ..geometry import level_index_range

DEFAULT_CONE_SAMPLES = 1024
DEFAULT_FAT_Y0_MULTIPLIER = 8.0


class FatBodyError(ValueError):
    """Body rejected by the fatness check; carries a violating point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = None if witness is None else np.asarray(witness, dtype=np.float64)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def points_in_polygon(pts: np.ndarray, poly: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Crossing-number membership, boundary-inclusive within tol."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    x, y = pts[:, 0], pts[:, 1]
    v1 = poly
    v2 = np.roll(poly, -1, axis=0)
    inside = np.zeros(len(pts), dtype=bool)
    for (x1, y1), (x2, y2) in zip(v1, v2):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    if tol > 0.0:
        inside |= _dist_to_boundary(pts, poly) <= tol
    return inside


def _dist_to_boundary(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    v1 = poly
    v2 = np.roll(poly, -1, axis=0)
    e = v2 - v1  # (V, 2)
    d = pts[:, None, :] - v1[None, :, :]  # (m, V, 2)
    ee = np.sum(e * e, axis=1)
    t = np.clip(np.sum(d * e[None, :, :], axis=2) / np.maximum(ee, 1e-300), 0.0, 1.0)
    near = v1[None, :, :] + t[:, :, None] * e[None, :, :]
    return np.sqrt(np.min(np.sum((pts[:, None, :] - near) ** 2, axis=2), axis=1))


def segment_dist_point(a, b, p) -> float:
    e = b - a
    t = float(np.clip(np.dot(p - a, e) / max(np.dot(e, e), 1e-300), 0.0, 1.0))
    return float(np.linalg.norm(a + t * e - p))


def fat_check(center, vertices, cone_samples: int = DEFAULT_CONE_SAMPLES):
    """Validate a star-shaped rounded-fat body; returns (r, alpha).

    Convex bodies are accepted outright.  Non-convex ones are accepted only
    if the tangent-cone condition holds at sampled boundary points; a
    violation is reported with the offending point.
    """
    rho = np.asarray(center, dtype=np.float64)
    poly = np.asarray(vertices, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise FatBodyError("polygon needs at least 3 planar vertices")
    if not (np.all(np.isfinite(poly)) and np.all(np.isfinite(rho))):
        raise FatBodyError("non-finite body coordinates")
    area2 = float(np.sum(_cross(poly, np.roll(poly, -1, axis=0))))
    if area2 == 0.0:
        raise FatBodyError("degenerate polygon")
    if area2 < 0.0:
        poly = poly[::-1].copy()

    v1, v2 = poly, np.roll(poly, -1, axis=0)
    scale = float(np.max(np.abs(poly - rho))) or 1.0
    tol = 1e-9 * scale
    # kernel membership: center on the left of every directed edge
    if np.any(_cross(v2 - v1, rho - v1) < -tol):
        raise FatBodyError("center is not in the polygon kernel", witness=rho)

    r_in = min(segment_dist_point(a, b, rho) for a, b in zip(v1, v2))
    r_out = float(np.max(np.linalg.norm(poly - rho, axis=1)))
    if r_in <= 0.0:
        raise FatBodyError("center lies on the boundary", witness=rho)
    alpha = r_out / r_in

    edge_turns = _cross(v2 - v1, np.roll(v2 - v1, -1, axis=0))
    if np.all(edge_turns >= -tol):
        return r_in, alpha, poly  # convex: rounded-fat automatically

    # sample the boundary uniformly by arc length, test the tangent cones
    lens = np.linalg.norm(v2 - v1, axis=1)
    cum = np.concatenate(([0.0], np.cumsum(lens)))
    stations = np.linspace(0.0, cum[-1], cone_samples, endpoint=False)
    seg = np.clip(np.searchsorted(cum, stations, side="right") - 1, 0, len(poly) - 1)
    frac = (stations - cum[seg]) / np.maximum(lens[seg], 1e-300)
    bpts = v1[seg] + frac[:, None] * (v2[seg] - v1[seg])

    for p in bpts:
        d = float(np.linalg.norm(p - rho))
        if d <= r_in * (1 + 1e-12):
            continue
        a = r_in**2 / d**2
        b = r_in * math.sqrt(max(d**2 - r_in**2, 0.0)) / d**2
        perp = np.array([-(p - rho)[1], (p - rho)[0]])
        for sign in (1.0, -1.0):
            touch = rho + a * (p - rho) + sign * b * perp
            ts = np.linspace(0.05, 0.95, 12)
            probe = p[None, :] + ts[:, None] * (touch - p)[None, :]
            ok = points_in_polygon(probe, poly, tol=tol)
            if not np.all(ok):
                bad = probe[~ok][0]
                raise FatBodyError("cone condition violated on the boundary", witness=bad)
    return r_in, alpha, poly


class Scaling2DFamily(DistanceFamily):
    def __init__(self, centers, vertex_lists, fat_y0_multiplier: float = DEFAULT_FAT_Y0_MULTIPLIER, validate: bool = True):
        self.centers = np.asarray(centers, dtype=np.float64)
        if self.centers.ndim != 2 or self.centers.shape[1] != 2:
            raise ValueError("centers must be an (n, 2) array")
        self.dim = 2
        self._y0_mult = float(fat_y0_multiplier)
        self.polys: list[np.ndarray] = []
        self.r_in = np.zeros(len(vertex_lists))
        self.alpha = np.zeros(len(vertex_lists))
        for i, verts in enumerate(vertex_lists):
            if validate:
                r, a, poly = fat_check(self.centers[i], verts)
            else:
                poly = np.asarray(verts, dtype=np.float64)
                v1, v2 = poly, np.roll(poly, -1, axis=0)
                r = min(segment_dist_point(u, v, self.centers[i]) for u, v in zip(v1, v2))
                a = float(np.max(np.linalg.norm(poly - self.centers[i], axis=1))) / r
            self.polys.append(poly)
            self.r_in[i] = r
            self.alpha[i] = a
        self.rel = [p - c for p, c in zip(self.polys, self.centers)]
        self.diam = np.array([_poly_diameter(p) for p in self.polys])
        # one growth constant for the whole family
        self._zeta = 2.0 * float(np.max(self.alpha)) if len(self.alpha) else 2.0
        self._pair_cache: dict[tuple[int, int], float] = {}

        vmax = max(len(p) for p in self.polys)
        self._rel_pad = np.zeros((len(self.polys), vmax, 2))
        self._edge_pad = np.zeros((len(self.polys), vmax, 2))
        self._edge_ok = np.zeros((len(self.polys), vmax), dtype=bool)
        for i, rel in enumerate(self.rel):
            v = len(rel)
            self._rel_pad[i, :v] = rel
            self._edge_pad[i, :v] = np.roll(rel, -1, axis=0) - rel
            self._edge_ok[i, :v] = True

    def size(self) -> int:
        return len(self.polys)

    # -- evaluation ----------------------------------------------------------

    def eval_one(self, i, q) -> float:
        return float(self.eval_subset(np.array([i]), q)[0])

    def eval_subset(self, ids, q) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        q = np.asarray(q, dtype=np.float64)
        delta = q[None, :] - self.centers[ids]  # (m, 2)
        a = self._rel_pad[ids]  # (m, V, 2)
        e = self._edge_pad[ids]
        ok = self._edge_ok[ids]
        denom = delta[:, None, 0] * e[..., 1] - delta[:, None, 1] * e[..., 0]
        num = delta[:, None, 0] * a[..., 1] - delta[:, None, 1] * a[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -num / denom
        valid = ok & np.isfinite(s) & (s >= -1e-9) & (s <= 1 + 1e-9)
        s = np.where(valid, s, 0.0)
        w = a + s[..., None] * e
        tc = np.einsum("mvk,mk->mv", w, delta) / np.maximum(
            np.einsum("mk,mk->m", delta, delta), 1e-300
        )[:, None]
        valid &= tc > 1e-12
        tc = np.where(valid, tc, -np.inf)
        best = tc.max(axis=1)
        out = np.where(best > 0, 1.0 / np.where(best > 0, best, 1.0), 0.0)
        # queries at a center have distance zero
        out[np.linalg.norm(delta, axis=1) < 1e-300] = 0.0
        return out

    # -- framework capabilities ----------------------------------------------

    def growth(self, i, y) -> float:
        # growth must satisfy the (1+eps) inflation bound, which the fatness
        # expansion gives for displacements up to eps * diam / (2 alpha)
        return y * self.diam[i] / (2.0 * self.alpha[i])

    def growth_constant(self) -> float:
        return self._zeta

    def sketch_constant(self) -> int:
        return self.dim

    def sublevel_threshold(self, i) -> float:
        return 0.0

    def pairwise_sep(self, i, j) -> float:
        key = (min(i, j), max(i, j))
        got = self._pair_cache.get(key)
        if got is None:
            got = self._first_touch(int(key[0]), int(key[1]))
            self._pair_cache[key] = got
        return got

    def _first_touch(self, i, j) -> float:
        delta = self.centers[j] - self.centers[i]
        if float(np.dot(delta, delta)) < 1e-300:
            return 0.0
        best = math.inf
        for verts, other_rel, sgn in ((self.rel[i], self.rel[j], 1.0), (self.rel[j], self.rel[i], -1.0)):
            d = sgn * delta  # solve rho_a + t*v = rho_b + t*(edge point)
            a = other_rel
            e = np.roll(a, -1, axis=0) - a
            for v in verts:
                u = v[None, :] - a  # (V, 2)
                w = -e
                cu = _cross(u, d[None, :])
                cw = _cross(w, d[None, :])
                with np.errstate(divide="ignore", invalid="ignore"):
                    s = -cu / cw
                s_ok = np.isfinite(s) & (s >= -1e-9) & (s <= 1 + 1e-9)
                s = np.where(s_ok, s, 0.0)
                vec = u + s[:, None] * w
                with np.errstate(divide="ignore", invalid="ignore"):
                    t = (vec @ d) / np.sum(vec * vec, axis=1)
                cand = t[s_ok & np.isfinite(t) & (t > 0)]
                if len(cand):
                    best = min(best, float(cand.min()))
        if not math.isfinite(best):
            raise RuntimeError("no boundary contact found between bodies")
        return best

    def sublevels_intersect(self, i, j, y) -> bool:
        if y <= 0:
            return bool(np.all(self.centers[i] == self.centers[j]))
        pa = self.centers[i] + y * self.rel[i]
        pb = self.centers[j] + y * self.rel[j]
        if points_in_polygon(pa[:1], pb).any() or points_in_polygon(pb[:1], pa).any():
            return True
        if points_in_polygon(pa, pb).any() or points_in_polygon(pb, pa).any():
            return True
        return _edges_cross(pa, pb)

    def cover_with_rungs(self, i, level, ys, rs):
        y_top = float(ys[-1])
        rel = self.rel[i]
        rho = self.centers[i]
        side = math.ldexp(1.0, -level)
        lo_pt = rho + y_top * rel.min(axis=0)
        hi_pt = rho + y_top * rel.max(axis=0)
        r0, r1 = level_index_range(lo_pt[0], hi_pt[0], level)
        c0, c1 = level_index_range(lo_pt[1], hi_pt[1], level)
        gx, gy = np.meshgrid(
            np.arange(r0, r1 + 1, dtype=np.int64),
            np.arange(c0, c1 + 1, dtype=np.int64),
            indexing="ij",
        )
        idx = np.stack([gx.ravel(), gy.ravel()], axis=1)
        lo = np.ldexp(idx.astype(np.float64), -level)
        reach = self._box_reach(i, lo, lo + side)
        keep = reach <= y_top * (1 + 1e-12)
        idx, reach = idx[keep], reach[keep]
        return idx, first_rung_indices(ys * (1 + 1e-12), reach)

    def _box_reach(self, i, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Min scaling at which body i's scaled copy meets each box [lo, hi]."""
        rho = self.centers[i]
        rel = self.rel[i]
        edges = np.roll(rel, -1, axis=0) - rel
        m = len(lo)
        best = np.full(m, np.inf)

        inside = np.all((rho >= lo) & (rho <= hi), axis=1)
        best[inside] = 0.0

        # vertex rays entering the box
        for v in rel:
            tlo = np.full(m, 0.0)
            thi = np.full(m, np.inf)
            feasible = np.ones(m, dtype=bool)
            for a in range(2):
                if v[a] > 1e-300 or v[a] < -1e-300:
                    t1 = (lo[:, a] - rho[a]) / v[a]
                    t2 = (hi[:, a] - rho[a]) / v[a]
                    lo_a = np.minimum(t1, t2)
                    hi_a = np.maximum(t1, t2)
                    tlo = np.maximum(tlo, lo_a)
                    thi = np.minimum(thi, hi_a)
                else:
                    feasible &= (rho[a] >= lo[:, a]) & (rho[a] <= hi[:, a])
            feasible &= tlo <= thi * (1 + 1e-12)
            t = np.maximum(tlo, 0.0)
            upd = feasible & (t < best)
            best[upd] = t[upd]

        # box corners swept by scaled edges
        corners = np.stack(
            [
                np.stack([lo[:, 0], lo[:, 1]], axis=1),
                np.stack([lo[:, 0], hi[:, 1]], axis=1),
                np.stack([hi[:, 0], lo[:, 1]], axis=1),
                np.stack([hi[:, 0], hi[:, 1]], axis=1),
            ],
            axis=1,
        )  # (m, 4, 2)
        deltas = corners - rho[None, None, :]
        for a, e in zip(rel, edges):
            cu = a[0] * deltas[..., 1] - a[1] * deltas[..., 0]
            cw = e[0] * deltas[..., 1] - e[1] * deltas[..., 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = -cu / cw
            vec = a[None, None, :] + s[..., None] * e[None, None, :]
            num = np.einsum("mck,mck->mc", vec, deltas)
            den = np.einsum("mck,mck->mc", vec, vec)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = num / den
            valid = np.isfinite(s) & (s >= -1e-9) & (s <= 1 + 1e-9) & np.isfinite(t) & (t > 0)
            t = np.where(valid, t, np.inf)
            tmin = t.min(axis=1)
            upd = tmin < best
            best[upd] = tmin[upd]
        return best

    def sketch(self, ids, delta, cr_bound=None) -> Sketch:
        ids = sorted(int(v) for v in ids)
        if not ids:
            raise ValueError("cannot sketch an empty id set")
        if delta <= 0:
            raise ValueError("delta must be positive")
        if len(ids) == 1:
            return Sketch((ids[0],), delta, 0.0)
        members = self._ucover_members(ids, delta)
        if len(members) >= len(ids):
            # tiling would not shrink the set; the set is its own 0-sketch
            return Sketch(tuple(ids), delta, 0.0)
        cr = self.exact_cr(ids) if cr_bound is None else float(cr_bound)
        y0 = self._y0_mult * cr * len(ids) / delta
        return Sketch(tuple(sorted(members)), delta, y0)

    def _ucover_members(self, ids, delta) -> list[int]:
        order = sorted(ids, key=lambda i: (-self.r_in[i], i))
        alpha = float(np.max(self.alpha[list(ids)]))
        r1 = self.r_in[order[0]]
        big = [i for i in order if alpha * self.r_in[i] > r1]
        members = {order[0]}
        if not big:
            return sorted(members)
        cube_diam = delta * alpha * r1 / alpha**3
        side = cube_diam / math.sqrt(2.0)
        est_cells_per_body = (2 * alpha * r1 / side + 2) ** 2
        if est_cells_per_body * len(big) > 4e6 or est_cells_per_body >= 16 * len(ids) ** 2:
            return list(ids)  # tiling uneconomical at this delta
        claimed: dict[tuple[int, int], int] = {}
        for i in big:
            rel = self.rel[i]
            lo_i = np.floor(rel.min(axis=0) / side).astype(np.int64)
            hi_i = np.floor(rel.max(axis=0) / side).astype(np.int64)
            xs = np.arange(lo_i[0], hi_i[0] + 1)
            ys_ = np.arange(lo_i[1], hi_i[1] + 1)
            gx, gy = np.meshgrid(xs, ys_, indexing="ij")
            cells = np.stack([gx.ravel(), gy.ravel()], axis=1)
            lo_box = cells * side
            hit = _boxes_touch_polygon(lo_box, lo_box + side, rel)
            for cx, cy in cells[hit]:
                key = (int(cx), int(cy))
                if key not in claimed:
                    claimed[key] = i
                    members.add(i)
        return sorted(members)

    def sketch_y0_multiplier(self) -> float:
        return self._y0_mult

    def sublevel_seed_point(self, i) -> np.ndarray:
        return self.centers[i].copy()

    def global_value_lower_bound(self, q) -> float:
        q = np.asarray(q, dtype=np.float64)
        gaps = np.linalg.norm(q[None, :] - self.centers, axis=1)
        outer = np.array([float(np.max(np.linalg.norm(r, axis=1))) for r in self.rel])
        return float(np.min(gaps / outer))

    def value_bounds_on_box(self, ids, lo, hi):
        ids = np.asarray(ids, dtype=np.int64)
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        center = (lo + hi) / 2.0
        half_diag = float(np.linalg.norm(hi - lo)) / 2.0
        lbs = np.zeros(len(ids))
        ubs = np.zeros(len(ids))
        for k, i in enumerate(ids):
            lbs[k] = float(self._box_reach(int(i), lo[None, :], hi[None, :])[0])
            f_c = self.eval_one(int(i), center)
            # displacement bound: moving by u inflates the scale by
            # 2*alpha*|u|/diam at most
            ubs[k] = f_c + 2.0 * self.alpha[i] * half_diag / self.diam[i]
        return lbs, ubs


def _poly_diameter(poly: np.ndarray) -> float:
    d2 = np.sum((poly[:, None, :] - poly[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(d2.max()))


def _edges_cross(pa: np.ndarray, pb: np.ndarray) -> bool:
    a1, a2 = pa, np.roll(pa, -1, axis=0)
    b1, b2 = pb, np.roll(pb, -1, axis=0)
    for p, q in zip(a1, a2):
        d1 = _cross((q - p)[None, :], b1 - p)
        d2 = _cross((q - p)[None, :], b2 - p)
        d3 = _cross(b2 - b1, p[None, :] - b1)
        d4 = _cross(b2 - b1, q[None, :] - b1)
        if np.any((d1 * d2 <= 0) & (d3 * d4 <= 0)):
            return True
    return False


def _boxes_touch_polygon(lo: np.ndarray, hi: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Exact box/polygon intersection for a batch of boxes."""
    m = len(lo)
    out = np.zeros(m, dtype=bool)
    # polygon vertex inside a box
    for v in poly:
        out |= np.all((v >= lo) & (v <= hi), axis=1)
    # box corner inside the polygon
    rem = ~out
    if rem.any():
        corners = np.concatenate(
            [
                np.stack([lo[rem, 0], lo[rem, 1]], axis=1),
                np.stack([hi[rem, 0], hi[rem, 1]], axis=1),
                np.stack([lo[rem, 0], hi[rem, 1]], axis=1),
                np.stack([hi[rem, 0], lo[rem, 1]], axis=1),
            ]
        )
        ins = points_in_polygon(corners, poly).reshape(4, -1).any(axis=0)
        idxs = np.where(rem)[0]
        out[idxs[ins]] = True
    # polygon edge crossing a box (Liang-Barsky overlap of segment and box)
    rem = ~out
    if rem.any():
        v1, v2 = poly, np.roll(poly, -1, axis=0)
        sub_lo, sub_hi = lo[rem], hi[rem]
        hitrem = np.zeros(rem.sum(), dtype=bool)
        for p, q in zip(v1, v2):
            d = q - p
            t0 = np.zeros(len(sub_lo))
            t1 = np.ones(len(sub_lo))
            okk = np.ones(len(sub_lo), dtype=bool)
            for a in range(2):
                if abs(d[a]) < 1e-300:
                    okk &= (p[a] >= sub_lo[:, a]) & (p[a] <= sub_hi[:, a])
                else:
                    ta = (sub_lo[:, a] - p[a]) / d[a]
                    tb = (sub_hi[:, a] - p[a]) / d[a]
                    t0 = np.maximum(t0, np.minimum(ta, tb))
                    t1 = np.minimum(t1, np.maximum(ta, tb))
            hitrem |= okk & (t0 <= t1)
        idxs = np.where(rem)[0]
        out[idxs[hitrem]] = True
    return out
