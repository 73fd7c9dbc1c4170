"""Dyadic grids, canonical cells and grid covers of regions in the unit cube.

Cells are half-open boxes [lo, hi) per axis so every point of [0,1)^d lies in
exactly one cell per level.  All index arithmetic is exact: coordinates are
scaled by powers of two through exponent manipulation, never through log().
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Deepest grid level handled anywhere.  Below this scale, cells degenerate to
# float noise; callers clamp here (see grid_level_for).
MAX_LEVEL = 40


def floor_log2(x: float) -> int:
    """Exact floor(log2(x)) for finite x > 0, via the binary exponent."""
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"floor_log2 requires finite x > 0, got {x!r}")
    m, e = math.frexp(x)  # x = m * 2**e, m in [0.5, 1)
    return e - 1


def grid_level_for(r: float, dim: int) -> int:
    """Grid level k whose cells have side 2**floor(log2(r / sqrt(dim))).

    The side is chosen so that a cell's diameter is at most r.  Ties at exact
    powers of two resolve to the larger side.  Values of r above sqrt(dim)
    clamp to level 0 (the unit cube itself); below the representable range
    they clamp to MAX_LEVEL.
    """
    if not math.isfinite(r) or r <= 0.0:
        raise ValueError(f"grid resolution must be finite and positive, got {r!r}")
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    k = -floor_log2(r / math.sqrt(dim))
    return min(max(k, 0), MAX_LEVEL)


def floor_scaled(x: float, k: int) -> int:
    """Exact floor(x * 2**k) computed on the binary representation."""
    if x == 0.0:
        return 0
    m, e = math.frexp(x)
    mant = int(math.ldexp(m, 53))  # 53-bit integer mantissa, exact
    shift = e - 53 + k
    if shift >= 0:
        return mant << shift
    return mant >> (-shift)


def floor_scaled_array(x: np.ndarray, k: int) -> np.ndarray:
    """Vectorized floor(x * 2**k); exact because ldexp only shifts exponents."""
    return np.floor(np.ldexp(x, k)).astype(np.int64)


@dataclass(frozen=True)
class CanonicalCell:
    """A dyadic cube inside [0,1]^d: side 2**-level, lower corner index*side."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("cell level must be non-negative")
        top = 1 << self.level
        if any(i < 0 or i >= top for i in self.index):
            raise ValueError(f"cell index {self.index} outside [0, 2^{self.level})")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.level)

    def low(self) -> np.ndarray:
        return np.ldexp(np.array(self.index, dtype=np.float64), -self.level)

    def high(self) -> np.ndarray:
        return np.ldexp(np.array(self.index, dtype=np.float64) + 1.0, -self.level)

    def contains_point(self, q: Sequence[float]) -> bool:
        """Half-open containment: closed on the lower face, open on the upper."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: point {q.shape} vs cell dim {self.dim}")
        lo = self.low()
        hi = self.high()
        return bool(np.all(q >= lo) and np.all(q < hi))

    def contains_cell(self, other: "CanonicalCell") -> bool:
        if other.level < self.level:
            return False
        shift = other.level - self.level
        return all((oi >> shift) == si for oi, si in zip(other.index, self.index))

    def overlaps(self, other: "CanonicalCell") -> bool:
        """True iff one cell is a (weak) sub-cube of the other."""
        return self.contains_cell(other) or other.contains_cell(self)

    def ancestor(self, level: int) -> "CanonicalCell":
        if level > self.level:
            raise ValueError("ancestor level must be <= cell level")
        shift = self.level - level
        return CanonicalCell(level, tuple(i >> shift for i in self.index))

    def child_containing(self, q: Sequence[float]) -> "CanonicalCell":
        return cell_of_point(q, self.level + 1)


def cell_of_point(q: Sequence[float], level: int) -> CanonicalCell:
    """The unique level-`level` cell whose half-open box contains q."""
    q = np.asarray(q, dtype=np.float64)
    top = 1 << level
    idx = []
    for x in q:
        if not (0.0 <= x <= 1.0):
            raise ValueError(f"point coordinate {x} outside the unit cube")
        idx.append(min(floor_scaled(float(x), level), top - 1))
    return CanonicalCell(level, tuple(idx))


def point_in_cell(q: Sequence[float], cell: CanonicalCell) -> bool:
    return cell.contains_point(q)


class BallRegion:
    """Closed Euclidean ball, with exact cube intersection predicate."""

    def __init__(self, center: Sequence[float], radius: float):
        self.center = np.asarray(center, dtype=np.float64)
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.radius = float(radius)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    def intersects_box(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        nearest = np.clip(self.center, lo, hi)
        return float(np.sum((nearest - self.center) ** 2)) <= self.radius**2


class BoxRegion:
    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo, self.hi

    def intersects_box(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        return bool(np.all(self.lo <= hi) and np.all(lo <= self.hi))


class PointRegion(BallRegion):
    def __init__(self, point: Sequence[float]):
        super().__init__(point, 0.0)


def level_index_range(lo: float, hi: float, level: int) -> tuple[int, int]:
    """Closed index range of level cells whose closed box meets [lo, hi]."""
    top = (1 << level) - 1
    first = max(0, min(floor_scaled(max(lo, 0.0), level), top))
    # hi exactly on a grid line still touches the cell to its right (closed boxes)
    last = max(0, min(floor_scaled(min(hi, 1.0), level), top))
    return first, last


def cells_covering(region, r: float, dim: int) -> set[CanonicalCell]:
    """All level-k cells (k = grid_level_for(r, dim)) whose closed cube meets
    the region.  The region provides bbox() and intersects_box(lo, hi)."""
    k = grid_level_for(r, dim)
    lo, hi = region.bbox()
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(hi < 0.0) or np.any(lo > 1.0) or np.any(hi < lo):
        return set()
    ranges = [level_index_range(float(lo[a]), float(hi[a]), k) for a in range(dim)]
    side = math.ldexp(1.0, -k)
    out = set()
    for idx in _iter_index_box(ranges):
        clo = np.ldexp(np.array(idx, dtype=np.float64), -k)
        if region.intersects_box(clo, clo + side):
            out.add(CanonicalCell(k, idx))
    return out


def _iter_index_box(ranges: list[tuple[int, int]]) -> Iterable[tuple[int, ...]]:
    if not ranges:
        yield ()
        return
    first, rest = ranges[0], ranges[1:]
    for i in range(first[0], first[1] + 1):
        for tail in _iter_index_box(rest):
            yield (i,) + tail


def ball_cover_arrays(center: np.ndarray, radius: float, level: int):
    """Index array (m, d) of level cells whose closed cube meets the closed
    ball, plus the exact distance from the ball center to each cube.

    Vectorized version of cells_covering for balls; the workhorse behind the
    weighted-point family.
    """
    d = center.shape[0]
    side = math.ldexp(1.0, -level)
    axes = []
    for a in range(d):
        first, last = level_index_range(center[a] - radius, center[a] + radius, level)
        axes.append(np.arange(first, last + 1, dtype=np.int64))
    grids = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    lo = np.ldexp(idx.astype(np.float64), -level)
    nearest = np.clip(center, lo, lo + side)
    dist = np.sqrt(np.sum((nearest - center) ** 2, axis=1))
    # conservative tolerance so exact tangencies survive float rounding
    keep = dist <= radius * (1 + 1e-12) + 1e-15
    return idx[keep], dist[keep]


def pack_cells(idx: np.ndarray, level: int, dim: int) -> np.ndarray:
    """Pack integer cell indices into level-tagged int64 keys.

    Layout: level in the top bits, then dim coordinate fields of PACK_BITS
    bits each.  Requires level <= pack_level_cap(dim).
    """
    cap = pack_level_cap(dim)
    if level > cap:
        raise ValueError(f"level {level} exceeds packing cap {cap} for d={dim}")
    bits = cap
    key = np.asarray(idx[:, 0], dtype=np.int64).copy()
    for a in range(1, dim):
        key = (key << bits) | np.asarray(idx[:, a], dtype=np.int64)
    return key | (np.int64(level) << np.int64(bits * dim))


def pack_level_cap(dim: int) -> int:
    # 6 bits reserved for the level tag; coordinates get the rest.
    return (63 - 6) // dim


def pack_point(q: np.ndarray, level: int, dim: int) -> int:
    bits = pack_level_cap(dim)
    key = 0
    for a in range(dim):
        top = (1 << level) - 1
        i = min(floor_scaled(float(q[a]), level), top)
        key = (key << bits) | i
    return key | (level << (bits * dim))


class Normalizer:
    """Uniform affine map sending an instance bounding box into [1/4, 3/4]^d.

    The same scale applies on every axis, so geometry (and scaling distances)
    is preserved up to similarity.  `scale` converts normalized distances back
    to input units: original = normalized / scale.
    """

    def __init__(self, lo: np.ndarray, scale: float, dim: int):
        self.lo = lo
        self.scale = scale
        self.dim = dim

    @classmethod
    def fit(cls, points: np.ndarray) -> "Normalizer":
        pts = np.asarray(points, dtype=np.float64)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        extent = float(np.max(hi - lo))
        if extent <= 0.0:
            extent = 1.0
        scale = 0.5 / extent
        center = (lo + hi) / 2.0
        # bbox center lands on the cube center, so the box sits in [1/4,3/4]^d
        anchor = center - 0.5 / scale
        return cls(anchor, scale, pts.shape[1])

    def forward(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts, dtype=np.float64) - self.lo) * self.scale

    def backward(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=np.float64) / self.scale + self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "scale": self.scale, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.array(d["lo"], dtype=np.float64), float(d["scale"]), int(d["dim"]))
