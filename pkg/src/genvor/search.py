"""Recursive proximity-search structure over a distance family.

Each internal node owns a splitting distance x, a dyadic interval structure
over [x/8, 8N^2 x], and children: one per cluster of the x/4-clustering for
queries below the window, plus a single coarse child whose clusters (at level
x N) are merged and re-sketched for queries above the window.  Leaves answer
by an exact scan of a small representative set.  Every query decision is
determined by cell containment, so flattening the tree into one overlay
reproduces the walk exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import (
    Partition,
    SplitStats,
    approx_clustering,
    refinement_map,
    splitting_distance,
)
from .deciders import DyadicInterval
from .family import DistanceFamily, Sketch
from .geometry import CanonicalCell
from .quadtree import CompressedQuadtree

SMALL_PARTITION = 4  # merge into a leaf below this many clusters
LEAF_SHRINK_ABOVE = 16


class BuildError(RuntimeError):
    pass


@dataclass
class SearchParams:
    eps: float
    n: int
    depth_bound: int
    delta: float
    log2_n_big: float  # log2 of the separation polynomial N
    cell_eps: float
    c_sk: int

    @property
    def n_big(self) -> float:
        return math.ldexp(1.0, 0) * 2.0**self.log2_n_big

    @classmethod
    def make(cls, family: DistanceFamily, eps: float, n: int) -> "SearchParams":
        if not (0.0 < eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")
        h = math.ceil(math.log(max(n, 2)) / math.log(8.0 / 7.0)) + 2
        delta = eps / (8.0 * h)
        c_sk = family.sketch_constant()
        k_mult = family.sketch_y0_multiplier()
        spec_term = c_sk * (math.log2(8.0 * max(n, 2)) - math.log2(delta)) + math.log2(k_mult)
        validity_floor = math.log2(k_mult * max(n, 2) / delta) + 3.0
        log2n_big = min(max(spec_term, validity_floor, 10.0), 200.0)
        cell_eps = 1.0 if family.dim <= 2 else 2.0
        params = cls(eps, n, h, delta, log2n_big, cell_eps, c_sk)
        if (1.0 + delta) ** h > 1.0 + eps / 4.0 + 1e-12:
            raise BuildError("sketch cascade quality budget violated")
        return params


@dataclass
class Part:
    """A cluster carried as its sketch: members answer for the cluster at
    distances >= valid_from."""

    members: tuple[int, ...]
    valid_from: float = 0.0
    cr_bound: float = 0.0
    layers: int = 0


@dataclass
class LeafNode:
    scan_ids: np.ndarray
    level: float

    def is_leaf(self) -> bool:
        return True


@dataclass
class InternalNode:
    x: float
    level: float
    beta: float
    interval: DyadicInterval
    member_cluster: dict[int, int]
    below_children: list
    above_child: object
    refinement: list[list[int]]
    parts_count: int

    def is_leaf(self) -> bool:
        return False


@dataclass
class SearchTree:
    family: DistanceFamily
    params: SearchParams
    seed: int
    root: object
    root_scan_ids: np.ndarray
    root_sketch_ids: np.ndarray
    root_sketch_from: float
    split_stats: SplitStats
    node_count: int = 0
    cell_count: int = 0
    max_depth: int = 0

    def summary(self) -> dict:
        return {
            "n": self.params.n,
            "epsilon": self.params.eps,
            "log2_N": self.params.log2_n_big,
            "depth": self.max_depth,
            "depth_bound": self.params.depth_bound,
            "node_count": self.node_count,
            "cell_count": self.cell_count,
            "seed": self.seed,
            "split_fallback_rate": self.split_stats.fallback_rate,
        }


def build(family: DistanceFamily, eps: float, seed: int = 0) -> SearchTree:
    n = family.size()
    if n < 1:
        raise ValueError("family must contain at least one function")
    params = SearchParams.make(family, eps, n)
    rng = np.random.default_rng(seed)
    stats = SplitStats()
    counters = {"nodes": 0, "cells": 0, "depth": 0}

    parts = [Part((i,)) for i in range(n)]
    root = _build_node(family, params, parts, 0.0, 0, rng, stats, counters)

    all_ids = np.arange(n)
    if n <= 64:
        cr = family.exact_cr(range(n))
    else:
        # star upper bound: everything connects through function 0 at this
        # level, and any upper bound yields a valid (larger) sketch floor
        cr = max(family.pairwise_sep(0, j) for j in range(1, n))
    root_sketch = family.sketch(range(n), eps / 8.0, cr_bound=cr) if n > 1 else Sketch((0,), eps, 0.0)
    tree = SearchTree(
        family,
        params,
        seed,
        root,
        all_ids,
        np.array(root_sketch.members, dtype=np.int64),
        root_sketch.valid_from,
        stats,
        node_count=counters["nodes"],
        cell_count=counters["cells"],
        max_depth=counters["depth"],
    )
    return tree


def _leaf(family, params, parts: list[Part], level: float, counters) -> LeafNode:
    members = sorted({m for p in parts for m in p.members})
    if len(parts) == 1 and len(members) > LEAF_SHRINK_ABOVE:
        part = parts[0]
        shrunk = family.sketch(members, params.eps / 8.0, cr_bound=part.cr_bound)
        budget = level * 2.0**params.log2_n_big
        if shrunk.valid_from <= max(part.valid_from, budget):
            members = sorted(shrunk.members)
    counters["nodes"] += 1
    return LeafNode(np.array(members, dtype=np.int64), level)


def _build_node(family, params, parts, level, depth, rng, stats, counters):
    counters["depth"] = max(counters["depth"], depth)
    if depth > params.depth_bound:
        raise BuildError(f"recursion depth {depth} exceeded bound {params.depth_bound}")
    m = len(parts)
    if m <= SMALL_PARTITION:
        return _leaf(family, params, parts, level, counters)

    members = sorted({i for p in parts for i in p.members})
    x = splitting_distance(family, [p.members for p in parts], rng, stats)
    n_big = 2.0**params.log2_n_big
    beta = 8.0 * n_big * n_big * x
    interval = DyadicInterval(family, members, x, beta, params.cell_eps, thin_eps=params.eps)
    counters["nodes"] += 1
    counters["cells"] += interval.cell_count()

    # children for the below branch: clusters at level max(x/4, node level)
    l4 = max(x / 4.0, level)
    below_parts = approx_clustering(family, members, 1.0, l4)
    part_map = refinement_map([p.members for p in parts], below_parts)
    member_cluster = {mem: ci for ci, cluster in enumerate(below_parts) for mem in cluster}
    below_children = []
    for ci, fine_idxs in enumerate(part_map):
        sub = [parts[k] for k in fine_idxs]
        if len(sub) >= m:
            raise BuildError("below branch did not shrink the partition")
        below_children.append(_build_node(family, params, sub, level, depth + 1, rng, stats, counters))

    # the above branch: merge clusters at level x*N and re-sketch them
    l_above = x * n_big
    above_clusters = approx_clustering(family, members, 1.0, l_above)
    above_map = refinement_map([p.members for p in parts], above_clusters)
    if len(above_clusters) > (7.0 / 8.0) * m + 1e-9:
        raise BuildError("coarse clustering did not merge enough clusters")
    new_parts = []
    for cluster_idxs in above_map:
        group = [parts[k] for k in cluster_idxs]
        if len(group) == 1:
            new_parts.append(group[0])  # nothing merged; keep the old sketch
            continue
        new_parts.append(resketch(family, params, group, 2.0 * l_above, beta))
    above_child = _build_node(family, params, new_parts, l_above, depth + 1, rng, stats, counters)

    return InternalNode(
        x, level, beta, interval, member_cluster, below_children, above_child,
        part_map, m,
    )


def resketch(family, params: SearchParams, group: list[Part], cr_bound: float, ceiling: float) -> Part:
    """Combine the sketches of merged clusters into one fresh sketch.

    The inputs stay valid because the merge happens at a level polynomially
    above the levels that created them; the combined validity floor is the
    max of the new sketch's own floor and the inputs'.
    """
    union_members = sorted({mm for p in group for mm in p.members})
    sk = family.sketch(union_members, params.delta, cr_bound=cr_bound)
    valid = max(sk.valid_from, max(p.valid_from for p in group))
    if valid > ceiling * (1.0 + 1e-9):
        raise BuildError("sketch validity exceeds the interval ceiling")
    zeta = family.growth_constant()
    cr_new = (1.0 + params.delta) * (1.0 + zeta / 2.0) * max(valid, cr_bound)
    layers = max(p.layers for p in group) + 1
    if layers > params.depth_bound:
        raise BuildError("sketch cascade deeper than the depth bound")
    return Part(tuple(sk.members), valid, cr_new, layers)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def _argmin_eval(family, ids: np.ndarray, q: np.ndarray) -> tuple[int, float]:
    # ids ascending, so the first minimum is the smallest id among ties
    vals = family.eval_subset(ids, q)
    k = int(np.argmin(vals))
    return int(ids[k]), float(vals[k])


def _outside_cube(q: np.ndarray) -> bool:
    return bool(np.any(q < 0.0) or np.any(q >= 1.0))


def query(tree: SearchTree, q) -> tuple[int, float]:
    fn, val, _ = query_verbose(tree, q)
    return fn, val


def query_verbose(tree: SearchTree, q) -> tuple[int, float, int]:
    """(function id, value, number of point locations performed)."""
    q = np.asarray(q, dtype=np.float64)
    family = tree.family
    if _outside_cube(q):
        ids = _out_of_cube_ids(tree, q)
        fn, val = _argmin_eval(family, ids, q)
        return fn, val, 0
    ids = query_scan_ids(tree, q)
    fn, val = _argmin_eval(family, ids.ids, q)
    return fn, val, ids.locates


@dataclass
class _ScanResult:
    ids: np.ndarray
    locates: int


MAX_DIRECT_SCAN = 32


def query_scan_ids(tree: SearchTree, q: np.ndarray) -> _ScanResult:
    """The id set whose exact argmin is the query answer.

    The walk is purely geometric (every branch is decided by cell containment
    and per-region candidate counts), which is what makes the flattened
    overlay equivalent.  Below the descent rung the candidate window still
    contains the exact nearest function, so the node answers directly unless
    the window is crowded; only then does it descend into the witness's
    cluster.
    """
    node = tree.root
    locates = 0
    guard = tree.params.depth_bound + 2
    while not node.is_leaf():
        guard -= 1
        if guard < 0:
            raise RuntimeError("query walk exceeded the depth bound")
        interval: DyadicInterval = node.interval
        hits, min_rung = interval.locate(q)
        locates += 1
        zone = interval.zone(min_rung)
        if zone == "above":
            node = node.above_child
            continue
        cands = interval.table.candidates(hits, int(min_rung) + interval.window)
        if zone == "below" and len(cands) > MAX_DIRECT_SCAN:
            witness = interval.witness(hits, min_rung)
            node = node.below_children[node.member_cluster[witness]]
            continue
        return _ScanResult(cands.astype(np.int64), locates)
    return _ScanResult(node.scan_ids, locates)


def _out_of_cube_ids(tree: SearchTree, q: np.ndarray) -> np.ndarray:
    """Far queries use the root sketch; nearer ones fall back to a full scan."""
    lb = tree.family.global_value_lower_bound(q)
    if lb >= tree.root_sketch_from:
        return tree.root_sketch_ids
    return tree.root_scan_ids


# ---------------------------------------------------------------------------
# Flattening into a single overlay (the AVD)
# ---------------------------------------------------------------------------


@dataclass
class Avd:
    tree: SearchTree
    overlay: CompressedQuadtree
    payloads: dict[int, tuple[int, ...]]
    region_count: int = 0

    def query(self, q) -> tuple[int, float]:
        q = np.asarray(q, dtype=np.float64)
        if _outside_cube(q):
            ids = _out_of_cube_ids(self.tree, q)
            return _argmin_eval(self.tree.family, ids, q)
        ids = self._payload_at(q)
        return _argmin_eval(self.tree.family, np.array(ids, dtype=np.int64), q)

    def _payload_at(self, q: np.ndarray) -> tuple[int, ...]:
        node = self.overlay.root
        best = self.payloads.get(id(node))
        while True:
            quad = node.quadrant_of_point(q)
            child = node.children.get(quad)
            if child is None or not child.cell.contains_point(q):
                break
            node = child
            got = self.payloads.get(id(node))
            if got is not None:
                best = got
        if best is None:
            raise RuntimeError("flattened overlay has no payload on the path")
        return best


def flatten(tree: SearchTree) -> Avd:
    """Collect every structure cell into one quadtree and precompute, per
    region, the id set the walk would scan there."""
    overlay = CompressedQuadtree(tree.family.dim)
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.is_leaf():
            continue
        for level, idx, _ in node.interval.table.iter_cells():
            overlay.insert(CanonicalCell(level, idx), None)
        stack.extend(node.below_children)
        stack.append(node.above_child)

    payloads: dict[int, tuple[int, ...]] = {}
    count = 0
    for n in overlay.nodes():
        rep = _region_rep_point(n)
        if rep is None:
            continue
        ids = query_scan_ids(tree, rep).ids
        payloads[id(n)] = tuple(int(v) for v in ids)
        count += 1
    return Avd(tree, overlay, payloads, region_count=count)


def _cell_center(cell: CanonicalCell) -> np.ndarray:
    return (cell.low() + cell.high()) / 2.0


def _quadrant(cell: CanonicalCell, corner: int) -> CanonicalCell:
    idx = tuple(2 * i + ((corner >> a) & 1) for a, i in enumerate(cell.index))
    return CanonicalCell(cell.level + 1, idx)


def _region_rep_point(node) -> np.ndarray | None:
    """A point interior to the node's cell but outside its children.

    Children occupy distinct quadrants, so either some quadrant is free, or a
    quadrant strictly contains its child and one of that quadrant's own
    sub-quadrants must be disjoint from the child.
    """
    cell = node.cell
    d = cell.dim
    children = [c.cell for c in node.children.values()]
    for corner in range(1 << d):
        quad = _quadrant(cell, corner)
        inside = [ch for ch in children if quad.contains_cell(ch)]
        if not inside:
            return _cell_center(quad)
        ch = inside[0]
        if ch == quad:
            continue
        for sub_corner in range(1 << d):
            sub = _quadrant(quad, sub_corner)
            if not sub.contains_cell(ch) and not ch.contains_cell(sub):
                return _cell_center(sub)
    return None


# ---------------------------------------------------------------------------
# Region export
# ---------------------------------------------------------------------------


@dataclass
class Region:
    outer: CanonicalCell
    inner: CanonicalCell | None
    rep: int


def export_regions(avd: Avd, max_extra_depth: int = 14) -> list[Region]:
    """Cube / cube-minus-cube regions, each with one representative id that
    is a certified (1+eps)-approximate nearest function on the region."""
    family = avd.tree.family
    eps = avd.tree.params.eps
    out: list[Region] = []

    def emit(outer: CanonicalCell, inner: CanonicalCell | None, ids: tuple[int, ...], budget: int):
        lo, hi = outer.low(), outer.high()
        arr = np.array(ids, dtype=np.int64)
        lbs, ubs = family.value_bounds_on_box(arr, lo, hi)
        rep_pt = (lo + hi) / 2.0
        vals = family.eval_subset(arr, rep_pt)
        rep_i = int(np.argmin(vals))
        # rep dominates the region when its max stays within (1+eps/2) of
        # every other candidate's min; where rep is the pointwise minimum the
        # ratio is 1 regardless of the scale, hence the "others only" bound
        if len(arr) > 1:
            others = np.delete(lbs, rep_i)
            certified = ubs[rep_i] <= (1.0 + eps / 2.0) * float(others.min()) + 1e-15
        else:
            certified = True
        if certified or budget <= 0:
            out.append(Region(outer, inner, int(arr[rep_i])))
            return
        # subdivide: quadrants of outer, skipping anything inside `inner`
        d = outer.dim
        for corner in range(1 << d):
            idx = tuple(2 * i + ((corner >> a) & 1) for a, i in enumerate(outer.index))
            sub = CanonicalCell(outer.level + 1, idx)
            if inner is not None and inner.contains_cell(sub):
                continue
            if inner is not None and sub.contains_cell(inner) and sub != inner:
                emit(sub, inner, ids, budget - 1)
            else:
                emit(sub, None, ids, budget - 1)

    for node in avd.overlay.nodes():
        ids = avd.payloads.get(id(node))
        if ids is None:
            continue
        cell = node.cell
        children = [c.cell for c in node.children.values()]
        _emit_gap_regions(cell, children, ids, emit, max_extra_depth)
    return out


def _emit_gap_regions(cell, children, ids, emit, budget):
    """Split cell-minus-children into cubes and cube-minus-cube pieces."""
    if not children:
        emit(cell, None, ids, budget)
        return
    d = cell.dim
    by_quad: dict[tuple, list] = {}
    for ch in children:
        shift = ch.level - cell.level - 1
        quad = tuple((ci >> shift) & 1 for ci in ch.index)
        by_quad.setdefault(quad, []).append(ch)
    for corner in range(1 << d):
        quad = tuple((corner >> a) & 1 for a in range(d))
        idx = tuple(2 * i + quad[a] for a, i in enumerate(cell.index))
        sub = CanonicalCell(cell.level + 1, idx)
        inside = by_quad.get(quad, [])
        if not inside:
            emit(sub, None, ids, budget)
        elif len(inside) == 1:
            ch = inside[0]
            if ch == sub:
                continue  # fully covered by the child's own region
            emit(sub, ch, ids, budget)
        else:
            _emit_gap_regions(sub, inside, ids, emit, budget)
