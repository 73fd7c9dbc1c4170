"""Pluggable distance-function families.

A family exposes the capabilities the search machinery needs: pointwise
evaluation, a growth function controlling how fast sublevel sets inflate,
grid covers of sublevel sets at prescribed resolutions, pairwise separation
values, and sketches (small representative subsets valid above a distance
threshold).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .geometry import CanonicalCell, grid_level_for

FunctionId = int


@dataclass(frozen=True)
class Sketch:
    """Subset of function ids whose inflated sublevel sets cover the source
    family's sublevel sets at every level y >= valid_from."""

    members: tuple[int, ...]
    delta: float
    valid_from: float

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("sketch must keep at least one member")


class DistanceFamily(ABC):
    """Interface shared by all distance families."""

    dim: int

    def __len__(self) -> int:
        return self.size()

    @abstractmethod
    def size(self) -> int: ...

    @abstractmethod
    def eval_one(self, i: FunctionId, q: np.ndarray) -> float: ...

    @abstractmethod
    def eval_subset(self, ids: np.ndarray, q: np.ndarray) -> np.ndarray: ...

    def eval_all(self, q: np.ndarray) -> np.ndarray:
        return self.eval_subset(np.arange(self.size()), np.asarray(q, dtype=np.float64))

    @abstractmethod
    def growth(self, i: FunctionId, y: float) -> float:
        """Growth function value lambda_i(y) (0 when the sublevel is empty)."""

    @abstractmethod
    def growth_constant(self) -> float: ...

    @abstractmethod
    def sketch_constant(self) -> int: ...

    @abstractmethod
    def sublevel_threshold(self, i: FunctionId) -> float:
        """Smallest y with a non-empty sublevel set."""

    @abstractmethod
    def pairwise_sep(self, i: FunctionId, j: FunctionId) -> float: ...

    @abstractmethod
    def cover_with_rungs(self, i: FunctionId, level: int, ys: np.ndarray, rs: np.ndarray):
        """Level-`level` cells around the sublevel sets of a rung ladder.

        ys is an ascending array of sublevel values with matching resolutions
        rs.  Returns (idx, first) where idx is an (m, dim) int64 array of cell
        indices and first[c] is the smallest rung j the cell belongs to.

        Contract, for every returned cell c with first[c] = j:
          * completeness: any level cell whose closed cube intersects
            sublevel(i, ys[j']) is returned with first <= j';
          * soundness: every point z of c satisfies
            f_i(z) <= ys[j] * (1 + rs[j] / growth(i, ys[j])).
        """

    @abstractmethod
    def sublevels_intersect(self, i: FunctionId, j: FunctionId, y: float) -> bool:
        """Exact predicate: sublevel(i, y) and sublevel(j, y) meet."""

    @abstractmethod
    def sketch(self, ids, delta: float, cr_bound: float | None = None) -> Sketch: ...

    @abstractmethod
    def sketch_y0_multiplier(self) -> float:
        """Constant K with sketch y0 <= K * CR * m / delta."""

    @abstractmethod
    def global_value_lower_bound(self, q: np.ndarray) -> float:
        """Cheap lower bound on min_i f_i(q); used by out-of-cube fallbacks."""

    @abstractmethod
    def value_bounds_on_box(self, ids: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        """(lower, upper) bounds of each f_i over the box [lo, hi]."""

    @abstractmethod
    def sublevel_seed_point(self, i: FunctionId) -> np.ndarray:
        """A point attaining (approximately) the minimum of f_i."""

    # -- shared helpers ------------------------------------------------------

    def sublevel_cells(self, i: FunctionId, y: float, r: float) -> set[CanonicalCell]:
        """Grid cover of sublevel(i, y) at resolution r (condition C2)."""
        if y < self.sublevel_threshold(i):
            return set()
        level = grid_level_for(r, self.dim)
        idx, _ = self.cover_with_rungs(i, level, np.array([y]), np.array([r]))
        return {CanonicalCell(level, tuple(int(v) for v in row)) for row in idx}

    def sep_key(self, i: FunctionId, j: FunctionId) -> tuple[float, int, int]:
        """Total order on pairwise separations: symbolic perturbation by ids."""
        return (self.pairwise_sep(i, j), min(i, j), max(i, j))

    def exact_cr(self, ids) -> float:
        """Connectivity level by the longest MST edge over pairwise_sep.

        Quadratic; meant for small id sets (sketch construction, oracles).
        """
        ids = list(ids)
        m = len(ids)
        if m <= 1:
            return 0.0
        in_tree = [ids[0]]
        rest = set(ids[1:])
        best: dict[int, tuple[float, int, int]] = {j: self.sep_key(ids[0], j) for j in rest}
        longest = 0.0
        while rest:
            j = min(rest, key=lambda v: best[v])
            longest = max(longest, best[j][0])
            rest.discard(j)
            in_tree.append(j)
            for v in rest:
                k = self.sep_key(j, v)
                if k < best[v]:
                    best[v] = k
        return longest


def sep_point(family: DistanceFamily, i: FunctionId, q) -> float:
    """Separation of a query point from one function: just f_i(q)."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (family.dim,):
        raise ValueError(f"dimension mismatch: {q.shape} vs {family.dim}")
    return family.eval_one(i, q)


def sep_sets(family: DistanceFamily, ids_a, ids_b) -> float:
    """Smallest level at which the two groups' sublevel sets meet."""
    ids_a = list(ids_a)
    ids_b = list(ids_b)
    if not ids_a or not ids_b:
        raise ValueError("sep_sets requires two non-empty id sets")
    if set(ids_a) & set(ids_b):
        raise ValueError("id sets must be disjoint")
    return min(family.pairwise_sep(i, j) for i in ids_a for j in ids_b)


def first_rung_indices(ys: np.ndarray, reach: np.ndarray) -> np.ndarray:
    """Smallest rung index j with ys[j] >= reach, per cell; len(ys) if none."""
    return np.searchsorted(ys, reach, side="left").astype(np.int32)
