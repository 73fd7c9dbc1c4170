"""Approximate near-neighbor deciders and interval structures.

A near decider answers one fixed distance threshold by point location among
grid cells covering the sublevel sets.  An interval structure stacks a
geometric ladder of such deciders over [alpha, beta] and resolves the whole
ladder with a single point location: every stored cell carries the smallest
ladder rung it belongs to, so the path minimum identifies the first rung
whose cover contains the query.  The returned function is then the exact
argmin over the functions labeled in a small rung window around that first
rung, which contains the true nearest function of the id set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .family import DistanceFamily
from .geometry import MAX_LEVEL, grid_level_for, pack_level_cap
from .quadtree import CellTable, CellTableBuilder, CompressedQuadtree, LabeledCell

MIN_RESOLUTION = math.ldexp(1.0, -MAX_LEVEL)


# ---------------------------------------------------------------------------
# Near decider
# ---------------------------------------------------------------------------


@dataclass
class NearDecider:
    tree: CompressedQuadtree
    alpha: float
    eps: float
    ids: tuple[int, ...]
    cell_count: int


def near_build(family: DistanceFamily, ids, alpha: float, eps: float) -> NearDecider:
    """Cells covering every non-empty sublevel(f, alpha) at resolution
    eps * growth(f, alpha); point location answers the near query."""
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise ValueError("alpha must be positive and finite")
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    ids = tuple(sorted(int(v) for v in ids))
    if not ids:
        raise ValueError("need at least one id")
    tree = CompressedQuadtree(family.dim)
    count = 0
    for fn in ids:
        if family.sublevel_threshold(fn) > alpha:
            continue  # empty sublevel at this distance
        r = max(eps * family.growth(fn, alpha), MIN_RESOLUTION)
        for cell in family.sublevel_cells(fn, alpha, r):
            tree.insert(cell, (fn, alpha, 0))
            count += 1
    return NearDecider(tree, alpha, eps, ids, count)


def near_query(dec: NearDecider, q) -> tuple[bool, int | None]:
    """(yes, witness): yes when the query lands in a stored cell."""
    hit = dec.tree.locate(np.asarray(q, dtype=np.float64))
    if hit is None:
        return False, None
    return True, hit.label[0]


# ---------------------------------------------------------------------------
# Ladder construction shared by both interval variants
# ---------------------------------------------------------------------------


def _insert_ladder(
    builder: CellTableBuilder,
    family: DistanceFamily,
    fn: int,
    radii: np.ndarray,
    res_of: np.ndarray,
    stop_at_root: bool = False,
) -> None:
    """Insert fn's cells for every rung, one call per contiguous level run."""
    cap = pack_level_cap(family.dim)
    thr = family.sublevel_threshold(fn)
    j = int(np.searchsorted(radii, thr * (1 - 1e-12)))
    nrungs = len(radii)
    while j < nrungs:
        lam = family.growth(fn, float(radii[j]))
        r = max(float(res_of[j]) * (lam if lam > 0 else 0.0), MIN_RESOLUTION)
        level = min(grid_level_for(r, family.dim), cap)
        j_end = j + 1
        while j_end < nrungs:
            lam2 = family.growth(fn, float(radii[j_end]))
            r2 = max(float(res_of[j_end]) * (lam2 if lam2 > 0 else 0.0), MIN_RESOLUTION)
            if min(grid_level_for(r2, family.dim), cap) != level:
                break
            j_end += 1
        ys = radii[j:j_end].astype(np.float64)
        rs = np.ldexp(1.0, -level) * math.sqrt(family.dim) * np.ones(j_end - j)
        idx, first = family.cover_with_rungs(fn, level, ys, rs)
        if len(idx):
            builder.add(idx, level, fn, first.astype(np.int64) + j)
        if stop_at_root and level == 0:
            return  # coarser rungs only repeat the root cell
        j = j_end


def _rung_res(family, fn: int, r: float, cell_eps: float) -> float:
    lam = family.growth(fn, r)
    return max(cell_eps * (lam if lam > 0 else 0.0), MIN_RESOLUTION)


def _rung_level(family, fn: int, r: float, cell_eps: float):
    if family.sublevel_threshold(fn) > r * (1 + 1e-12):
        return None
    cap = pack_level_cap(family.dim)
    return min(grid_level_for(_rung_res(family, fn, r, cell_eps), family.dim), cap)


# ---------------------------------------------------------------------------
# Standalone interval structure (explicit geometric ladder)
# ---------------------------------------------------------------------------


class IntervalStructure:
    """Ladder of near deciders for distances (alpha/2) * (1+eps/4)^i."""

    def __init__(self, family: DistanceFamily, ids, alpha: float, beta: float, eps: float):
        if not (0.0 < alpha <= beta):
            raise ValueError("need 0 < alpha <= beta")
        if not (0.0 < eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")
        self.family = family
        self.ids = tuple(sorted(int(v) for v in ids))
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.eps = float(eps)
        self.ratio = 1.0 + eps / 4.0
        self.num_rungs = math.ceil(math.log(4.0 * beta / alpha) / math.log(self.ratio)) + 1
        self.radii = (alpha / 2.0) * self.ratio ** np.arange(self.num_rungs)
        # each rung acts as a (1 + eps/4)-grade near decider
        res = (eps / 4.0) * np.ones(self.num_rungs)
        builder = CellTableBuilder(family.dim)
        for fn in self.ids:
            _insert_ladder(builder, family, fn, self.radii, res)
        self.table: CellTable = builder.finalize()
        # first rung at least beta: anything strictly above it means sep > beta
        self.rung_beta = int(np.searchsorted(self.radii, beta * (1 - 1e-12)))
        # rung window that certainly contains the exact argmin's first rung
        self.window = int(math.ceil(math.log(1.0 + eps) / math.log(self.ratio))) + 1

    def ladder_levels(self) -> int:
        return self.num_rungs

    def cell_count(self) -> int:
        return len(self.table)

    def query(self, q) -> tuple[str, int | None]:
        q = np.asarray(q, dtype=np.float64)
        hits, min_rung = self.table.locate_path(q)
        if not math.isfinite(min_rung) or min_rung > self.rung_beta:
            return "above", None
        cands = self.table.candidates(hits, int(min_rung) + self.window)
        vals = self.family.eval_subset(cands, q)
        k = int(np.lexsort((cands, vals))[0])
        fn, val = int(cands[k]), float(vals[k])
        if val < self.alpha:
            return "below", fn
        return "within", fn

    def rung_yes(self, q, j: int) -> tuple[bool, int | None]:
        """Rung j viewed as a standalone near decider (test hook)."""
        q = np.asarray(q, dtype=np.float64)
        hits, _ = self.table.locate_path(q)
        per_fn = self.table.min_rung_of_fn_on_path(hits)
        best = [fn for fn, rung in per_fn.items() if rung <= j]
        if not best:
            return False, None
        return True, min(best)


def interval_build(family, ids, alpha, beta, eps) -> IntervalStructure:
    return IntervalStructure(family, ids, alpha, beta, eps)


def interval_query(s: IntervalStructure, q) -> tuple[str, int | None]:
    return s.query(q)


# ---------------------------------------------------------------------------
# In-search interval: dyadic rungs anchored at the split distance
# ---------------------------------------------------------------------------


THIN_MIN_IDS = 512


class DyadicInterval:
    """Power-of-two rung ladder r_j = (x/16) * 2^j reaching past beta.

    Cells are deliberately coarse (resolution cell_eps ~ 1); precision comes
    from evaluating the candidate window exactly.  Rungs whose grid level
    collapses to the root cell are stored once, so huge spreads cost nothing.

    With thin_eps set (and a family exposing rung_representatives), coarse
    rungs above the descend band store only a net of representatives whose
    value error is at most (thin_eps/4) * rung radius; the candidate window
    widens by one rung to keep the exact/near-exact argmin inside it.
    """

    def __init__(self, family: DistanceFamily, ids, x: float, beta: float,
                 cell_eps: float, thin_eps: float | None = None):
        self.family = family
        self.ids = tuple(int(v) for v in ids)
        self.x = float(x)
        self.beta = float(beta)
        self.cell_eps = float(cell_eps)
        self.base = x / 16.0
        self.num_rungs = max(1, math.ceil(math.log2(max(beta / self.base, 2.0)))) + 1
        self.radii = self.base * np.ldexp(1.0, np.arange(self.num_rungs))
        self.rung_beta = int(np.searchsorted(self.radii, beta * (1 - 1e-12)))
        # descend threshold: rung value bound (1+cell_eps)*r_j <= x/4
        self.rung_below = int(np.floor(math.log2(4.0 / (1.0 + self.cell_eps))))
        self.window = int(math.ceil(math.log2(1.0 + self.cell_eps))) + 1

        thin = (
            thin_eps is not None
            and len(self.ids) >= THIN_MIN_IDS
            and hasattr(family, "rung_representatives")
        )
        builder = CellTableBuilder(family.dim)
        res = self.cell_eps * np.ones(self.num_rungs)
        if not thin:
            for fn in self.ids:
                _insert_ladder(builder, family, fn, self.radii, res, stop_at_root=True)
        else:
            self.window += 1  # representatives may surface one rung later
            ids_arr = np.array(self.ids, dtype=np.int64)
            first_thin = self.rung_below + 1
            fine = self.radii[:first_thin]
            for fn in self.ids:
                _insert_ladder(builder, family, fn, fine, res[:first_thin])
            done: set[int] = set()
            for j in range(first_thin, self.num_rungs):
                r_j = float(self.radii[j])
                reps = family.rung_representatives(ids_arr, r_j, (thin_eps / 4.0) * r_j)
                pending = [int(f) for f in reps if int(f) not in done]
                for fn in pending:
                    level = _rung_level(family, fn, r_j, self.cell_eps)
                    if level is None:
                        continue  # sublevel still empty at this rung
                    idx, first = family.cover_with_rungs(
                        fn, level, np.array([r_j]),
                        np.array([_rung_res(family, fn, r_j, self.cell_eps)]),
                    )
                    if len(idx):
                        builder.add(idx, level, fn, first.astype(np.int64) + j)
                    if level == 0:
                        done.add(fn)
                # bucket grids nest as rungs coarsen, so rep sets only shrink;
                # once every current rep sits at the root cell, coarser rungs
                # cannot add anything new
                if all(int(f) in done for f in reps):
                    break
        self.table = builder.finalize()

    def cell_count(self) -> int:
        return len(self.table)

    def locate(self, q: np.ndarray):
        return self.table.locate_path(q)

    def zone(self, min_rung) -> str:
        if not math.isfinite(min_rung) or min_rung > self.rung_beta:
            return "above"
        if min_rung <= self.rung_below:
            return "below"
        return "within"

    def best_candidate(self, q: np.ndarray, hits, min_rung) -> tuple[int, float]:
        cands = self.table.candidates(hits, int(min_rung) + self.window)
        vals = self.family.eval_subset(cands, q)
        k = int(np.lexsort((cands, vals))[0])
        return int(cands[k]), float(vals[k])

    def witness(self, hits, min_rung) -> int:
        cands = self.table.candidates(hits, int(min_rung))
        return int(cands.min())


def near_view_labeled_cells(dec: NearDecider) -> list[LabeledCell]:
    return dec.tree.labeled_cells()
