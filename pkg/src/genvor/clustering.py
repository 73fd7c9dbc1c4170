"""Partitions of function ids by sublevel-set connectivity.

approx_clustering tiles every sublevel set with grid cells at resolution
eps * growth and unions functions whose cells overlap (one a sub-cube of the
other).  The result is sandwiched between the exact clusterings at the level
and at (1 + eps) times the level.
"""

from __future__ import annotations

import math

import numpy as np

from .family import DistanceFamily
from .geometry import grid_level_for, pack_cells, pack_level_cap
from .deciders import MIN_RESOLUTION

Partition = list[tuple[int, ...]]

PERTURBATION_FLOOR = math.ldexp(1.0, -40)
SPLIT_MAX_TRIES = 64


class UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self) -> Partition:
        out: dict[int, list[int]] = {}
        for i in self.parent:
            out.setdefault(self.find(i), []).append(i)
        return sorted(tuple(sorted(g)) for g in out.values())


def approx_clustering(family: DistanceFamily, ids, eps: float, level: float) -> Partition:
    """Partition with CCS(level) refining it and it refining CCS((1+eps)level)."""
    ids = sorted(int(v) for v in ids)
    if eps <= 0:
        raise ValueError("eps must be positive")
    uf = UnionFind(ids)
    if level <= 0.0:
        return uf.groups()
    cap = pack_level_cap(family.dim)
    cell_owner: dict[int, int] = {}
    levels_seen: set[int] = set()
    entries: list[tuple[int, int, int]] = []  # (grid level, key, fn)
    for fn in ids:
        if family.sublevel_threshold(fn) > level:
            continue
        lam = family.growth(fn, level)
        r = max(eps * lam, MIN_RESOLUTION)
        k = min(grid_level_for(r, family.dim), cap)
        rs = np.array([math.ldexp(1.0, -k) * math.sqrt(family.dim)])
        idx, _ = family.cover_with_rungs(fn, k, np.array([level]), rs)
        if len(idx) == 0:
            continue
        keys = pack_cells(idx, k, family.dim)
        levels_seen.add(k)
        for key in keys:
            entries.append((k, int(key), fn))
    # identical cells: union everything sharing a key
    for k, key, fn in entries:
        if key in cell_owner:
            uf.union(cell_owner[key], fn)
        else:
            cell_owner[key] = fn
    # nested cells: look up ancestors at every coarser occupied grid level
    lvls = sorted(levels_seen)
    bits = pack_level_cap(family.dim)
    coord_mask = (1 << (bits * family.dim)) - 1
    for k, key, fn in entries:
        raw = key & coord_mask
        coords = [(raw >> (bits * (family.dim - 1 - a))) & ((1 << bits) - 1) for a in range(family.dim)]
        for k2 in lvls:
            if k2 >= k:
                break
            shift = k - k2
            akey = 0
            for c in coords:
                akey = (akey << bits) | (c >> shift)
            akey |= k2 << (bits * family.dim)
            owner = cell_owner.get(akey)
            if owner is not None:
                uf.union(owner, fn)
    return uf.groups()


def connectivity_level_exact(family: DistanceFamily, ids) -> float:
    """Longest MST edge over pairwise separations (oracle grade)."""
    ids = sorted(int(v) for v in ids)
    if len(ids) > (1 << 10):
        raise ValueError("exact connectivity level guarded at 2^10 ids")
    return family.exact_cr(ids)


def sep_connect(family: DistanceFamily, id_a: int, id_b: int) -> float:
    """Smallest power of two at which the pair's approximate clustering
    merges; one of the <= 3 dyadic candidates in [sep/4, sep]."""
    if id_a == id_b:
        raise ValueError("need two distinct ids")
    alpha = family.pairwise_sep(id_a, id_b)
    if alpha <= PERTURBATION_FLOOR:
        return PERTURBATION_FLOOR
    e = math.frexp(alpha)[1] - 1  # floor(log2(alpha))
    cands = [math.ldexp(1.0, e - 2), math.ldexp(1.0, e - 1), math.ldexp(1.0, e)]
    cands = [c for c in cands if alpha / 4.0 <= c <= alpha]
    for c in cands:
        if len(approx_clustering(family, [id_a, id_b], 1.0, c)) == 1:
            return c
    # merge is certain once the level reaches the true separation
    c = math.ldexp(1.0, e + 1)
    while len(approx_clustering(family, [id_a, id_b], 1.0, c)) > 1:
        c *= 2.0
    return c


def sep_between(family: DistanceFamily, ids_a, ids_b) -> float:
    """Minimum pair separation across two disjoint id groups, with the
    symbolic (value, min-id, max-id) perturbation order."""
    if hasattr(family, "sep_min_between"):
        return family.sep_min_between(ids_a, ids_b)[0]
    best = None
    for i in ids_a:
        for j in ids_b:
            k = family.sep_key(i, j)
            if best is None or k < best:
                best = k
    if best is None:
        raise ValueError("empty id group")
    return best[0]


class SplitStats:
    def __init__(self):
        self.calls = 0
        self.fallbacks = 0

    @property
    def fallback_rate(self) -> float:
        return self.fallbacks / self.calls if self.calls else 0.0


def splitting_distance(
    family: DistanceFamily,
    parts: Partition,
    rng: np.random.Generator,
    stats: SplitStats | None = None,
) -> float:
    """Distance x with at least m/4 clusters at x/4 and at most 7m/8 at x.

    Randomized cluster sampling with a deterministic median fallback; the
    returned x is re-verified through approx_clustering before returning.
    """
    m = len(parts)
    if m < 2:
        raise ValueError("splitting needs at least two clusters")
    if stats is not None:
        stats.calls += 1
    ids = [i for part in parts for i in part]

    def verified(x: float) -> bool:
        n_hi = len(approx_clustering(family, ids, 1.0, x))
        if n_hi > (7.0 / 8.0) * m + 1e-9:
            return False
        n_lo = len(approx_clustering(family, ids, 1.0, x / 4.0))
        return n_lo >= m / 4.0 - 1e-9

    for _ in range(SPLIT_MAX_TRIES):
        c = int(rng.integers(m))
        rest = [i for k, part in enumerate(parts) if k != c for i in part]
        x = max(sep_between(family, parts[c], rest), PERTURBATION_FLOOR)
        if verified(x):
            return x
    if stats is not None:
        stats.fallbacks += 1
    r_all = []
    for c in range(m):
        rest = [i for k, part in enumerate(parts) if k != c for i in part]
        r_all.append(max(sep_between(family, parts[c], rest), PERTURBATION_FLOOR))
    r_all.sort()
    x = r_all[m // 2]
    if not verified(x):
        raise RuntimeError("median splitting distance failed verification")
    return x


def refinement_map(fine: Partition, coarse: Partition) -> list[list[int]]:
    """For each coarse part, the indices of fine parts composing it."""
    where = {}
    for fi, part in enumerate(fine):
        for member in part:
            where[member] = fi
    out: list[list[int]] = []
    seen: set[int] = set()
    for cpart in coarse:
        fine_idxs = sorted({where[m] for m in cpart})
        for fi in fine_idxs:
            if fi in seen:
                raise ValueError("fine partition does not refine the coarse one")
            if not set(fine[fi]) <= set(cpart):
                raise ValueError(f"fine part {fi} straddles coarse parts")
            seen.add(fi)
        out.append(fine_idxs)
    if len(seen) != len(fine):
        raise ValueError("refinement map does not cover the fine partition")
    return out


def is_refinement(fine: Partition, coarse: Partition) -> bool:
    try:
        refinement_map(fine, coarse)
        return True
    except ValueError:
        return False
