"""Compressed quadtrees over canonical cells.

Two representations share the same point-location semantics ("smallest
inserted cell containing the query"):

* CompressedQuadtree: pointer-based, supports priority overlay, region
  export and a stable debug dump.  Used for near deciders, flattened
  structures and tests.
* CellTable: flat sorted-key storage for bulk cell sets with per-cell integer
  labels.  One binary search over level-tagged keys answers a whole
  root-to-leaf path; this is what the interval structures are built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import (
    CanonicalCell,
    cell_of_point,
    floor_scaled,
    pack_cells,
    pack_level_cap,
)

# label = (function id, level value y, structure priority)
Label = tuple[int, float, int]


@dataclass(frozen=True)
class LabeledCell:
    cell: CanonicalCell
    label: Label


def _better_label(a: Label, b: Label) -> Label:
    # duplicate cell rule: smaller y wins, then smaller id
    ka = (a[1], a[0], a[2])
    kb = (b[1], b[0], b[2])
    return a if ka <= kb else b


class _Node:
    __slots__ = ("cell", "label", "children", "tree_labels", "resolved")

    def __init__(self, cell: CanonicalCell):
        self.cell = cell
        self.label: Optional[Label] = None
        self.children: dict[int, _Node] = {}
        self.tree_labels: dict[int, Label] = {}
        self.resolved: Optional[Label] = None

    def quadrant_of(self, cell: CanonicalCell) -> int:
        shift = cell.level - self.cell.level - 1
        q = 0
        for a, (ci, si) in enumerate(zip(cell.index, self.cell.index)):
            bit = (ci >> shift) & 1
            q |= bit << a
        return q

    def quadrant_of_point(self, q_point) -> int:
        child = cell_of_point(q_point, self.cell.level + 1)
        return self.quadrant_of(child)


def _lca_cell(c1: CanonicalCell, c2: CanonicalCell) -> CanonicalCell:
    lvl = min(c1.level, c2.level)
    i1 = tuple(i >> (c1.level - lvl) for i in c1.index)
    i2 = tuple(i >> (c2.level - lvl) for i in c2.index)
    drop = 0
    for a, b in zip(i1, i2):
        drop = max(drop, (a ^ b).bit_length())
    lvl -= drop
    return CanonicalCell(lvl, tuple(i >> drop for i in i1))


class CompressedQuadtree:
    """Compressed quadtree storing labeled canonical cells of [0,1]^d."""

    def __init__(self, dim: int):
        self.dim = dim
        self.root = _Node(CanonicalCell(0, (0,) * dim))

    # -- construction ------------------------------------------------------

    def insert(self, cell: CanonicalCell, label: Optional[Label]) -> None:
        node = self.root
        while True:
            if node.cell == cell:
                if label is not None:
                    node.label = label if node.label is None else _better_label(node.label, label)
                return
            quad = node.quadrant_of(cell)
            child = node.children.get(quad)
            if child is None:
                new = _Node(cell)
                if label is not None:
                    new.label = label
                node.children[quad] = new
                return
            if child.cell.contains_cell(cell):
                node = child
                continue
            if cell.contains_cell(child.cell):
                new = _Node(cell)
                if label is not None:
                    new.label = label
                new.children[new.quadrant_of(child.cell)] = child
                node.children[quad] = new
                return
            # split at the lowest common ancestor
            mid = _Node(_lca_cell(cell, child.cell))
            leaf = _Node(cell)
            if label is not None:
                leaf.label = label
            mid.children[mid.quadrant_of(child.cell)] = child
            mid.children[mid.quadrant_of(cell)] = leaf
            node.children[quad] = mid
            return

    @classmethod
    def build(cls, cells: Iterable[LabeledCell], dim: Optional[int] = None) -> "CompressedQuadtree":
        cells = list(cells)
        if dim is None:
            if not cells:
                raise ValueError("dimension required for an empty build")
            dim = cells[0].cell.dim
        tree = cls(dim)
        for lc in cells:
            tree.insert(lc.cell, lc.label)
        return tree

    # -- queries -----------------------------------------------------------

    def locate(self, q) -> Optional[LabeledCell]:
        """Smallest inserted (labeled) cell containing q, or None."""
        q = np.asarray(q, dtype=np.float64)
        if np.any(q < 0.0) or np.any(q >= 1.0):
            return None
        node = self.root
        best: Optional[_Node] = None
        while True:
            if node.label is not None:
                best = node
            quad = node.quadrant_of_point(q)
            child = node.children.get(quad)
            if child is None or not child.cell.contains_point(q):
                break
            node = child
        if best is None:
            return None
        return LabeledCell(best.cell, best.label)

    def locate_resolved(self, q) -> Optional[Label]:
        """Resolved label of the deepest overlay node containing q."""
        q = np.asarray(q, dtype=np.float64)
        if np.any(q < 0.0) or np.any(q >= 1.0):
            return None
        node = self.root
        res = node.resolved
        while True:
            quad = node.quadrant_of_point(q)
            child = node.children.get(quad)
            if child is None or not child.cell.contains_point(q):
                return res
            node = child
            if node.resolved is not None:
                res = node.resolved

    # -- maintenance -------------------------------------------------------

    def nodes(self) -> Iterable[_Node]:
        stack = [self.root]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(n.children.values())

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    def labeled_cells(self) -> list[LabeledCell]:
        return [LabeledCell(n.cell, n.label) for n in self.nodes() if n.label is not None]

    def check_compression(self) -> bool:
        """No label-free single-child node except the root."""
        for n in self.nodes():
            if n is self.root:
                continue
            if n.label is None and n.tree_labels == {} and len(n.children) == 1:
                return False
        return True

    def dump(self) -> str:
        """Stable one-line-per-node format: level, index tuple, label triple."""
        lines = []

        def rec(node: _Node):
            lab = ""
            if node.label is not None:
                lab = f" label={node.label[0]},{node.label[1]!r},{node.label[2]}"
            lines.append(f"L{node.cell.level} {','.join(map(str, node.cell.index))}{lab}")
            for quad in sorted(node.children):
                rec(node.children[quad])

        rec(self.root)
        return "\n".join(lines)


def overlay(trees: Sequence[CompressedQuadtree]) -> CompressedQuadtree:
    """Overlay trees sharing the unit-cube root; later trees take priority.

    Every region of the result carries the label that a sequence of locates
    (highest priority first) would have produced, so a single locate_resolved
    answers the combined query.
    """
    if not trees:
        raise ValueError("need at least one tree")
    dim = trees[0].dim
    out = CompressedQuadtree(dim)
    for t_idx, tree in enumerate(trees):
        for lc in tree.labeled_cells():
            out.insert(lc.cell, None)
            # find the node we just ensured and tag the tree label
            node = _find_node(out, lc.cell)
            prev = node.tree_labels.get(t_idx)
            node.tree_labels[t_idx] = lc.label if prev is None else _better_label(prev, lc.label)

    cur: list[Optional[Label]] = [None] * len(trees)

    def resolve(node: _Node):
        saved = []
        for t_idx, lab in node.tree_labels.items():
            saved.append((t_idx, cur[t_idx]))
            cur[t_idx] = lab
        node.resolved = None
        for t_idx in range(len(trees) - 1, -1, -1):
            if cur[t_idx] is not None:
                node.resolved = cur[t_idx]
                break
        # materialize so the overlay is itself a plain labeled tree (and can
        # be overlaid again)
        node.label = node.resolved
        for child in node.children.values():
            resolve(child)
        for t_idx, lab in saved:
            cur[t_idx] = lab

    resolve(out.root)
    return out


def _find_node(tree: CompressedQuadtree, cell: CanonicalCell) -> _Node:
    node = tree.root
    while node.cell != cell:
        node = node.children[node.quadrant_of(cell)]
    return node


# ---------------------------------------------------------------------------
# Flat packed storage
# ---------------------------------------------------------------------------


class CellTableBuilder:
    """Accumulates (cell, fn, rung) triples level by level."""

    def __init__(self, dim: int):
        self.dim = dim
        self.keys: list[np.ndarray] = []
        self.fns: list[np.ndarray] = []
        self.rungs: list[np.ndarray] = []

    def add(self, idx: np.ndarray, level: int, fn: int, rungs: np.ndarray) -> None:
        if len(idx) == 0:
            return
        self.keys.append(pack_cells(idx, level, self.dim))
        self.fns.append(np.full(len(idx), fn, dtype=np.int32))
        self.rungs.append(np.asarray(rungs, dtype=np.int32))

    def add_root(self, fn: int, rung: int) -> None:
        self.add(np.zeros((1, self.dim), dtype=np.int64), 0, fn, np.array([rung]))

    def finalize(self) -> "CellTable":
        if not self.keys:
            return CellTable.empty(self.dim)
        keys = np.concatenate(self.keys)
        fns = np.concatenate(self.fns)
        rungs = np.concatenate(self.rungs)
        order = np.lexsort((rungs, fns, keys))
        keys, fns, rungs = keys[order], fns[order], rungs[order]
        # drop duplicate (key, fn): first one has the minimal rung
        if len(keys) > 1:
            same = (keys[1:] == keys[:-1]) & (fns[1:] == fns[:-1])
            keep = np.concatenate(([True], ~same))
            keys, fns, rungs = keys[keep], fns[keep], rungs[keep]
        uniq, start = np.unique(keys, return_index=True)
        group_min = np.minimum.reduceat(rungs, start)
        bits = pack_level_cap(self.dim)
        levels = np.unique((uniq >> np.int64(bits * self.dim)).astype(np.int64))
        return CellTable(self.dim, uniq, start, fns, rungs, group_min, levels)


class CellTable:
    """Sorted level-tagged cell keys with (fn, rung) entry groups."""

    def __init__(self, dim, uniq_keys, group_start, fns, rungs, group_min, levels):
        self.dim = dim
        self.uniq_keys = uniq_keys
        self.group_start = group_start
        self.fns = fns
        self.rungs = rungs
        self.group_min = group_min
        self.levels = levels
        self._bits = pack_level_cap(dim)
        self._mult = np.left_shift(np.int64(1), self._bits * np.arange(dim - 1, -1, -1, dtype=np.int64))
        self._level_tag = np.left_shift(levels.astype(np.int64), np.int64(self._bits * dim))
        self._tops = np.left_shift(np.int64(1), levels.astype(np.int64)) - 1
        self._ends = np.append(self.group_start, len(self.fns))
        self._levels_i64 = levels[:, None].astype(np.int64)

    @classmethod
    def empty(cls, dim: int) -> "CellTable":
        z = np.zeros(0, dtype=np.int64)
        zi = np.zeros(0, dtype=np.int32)
        return cls(dim, z, z, zi, zi, zi, z)

    def __len__(self) -> int:
        return len(self.fns)

    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.uniq_keys, self.group_start, self.fns, self.rungs, self.group_min))

    def path_keys(self, q: np.ndarray) -> np.ndarray:
        """Level-tagged keys of q's cells at every stored level."""
        if len(self.levels) == 0:
            return np.zeros(0, dtype=np.int64)
        idx = np.floor(np.ldexp(q[None, :], self._levels_i64)).astype(np.int64)
        np.minimum(idx, self._tops[:, None], out=idx)
        np.maximum(idx, 0, out=idx)
        return (idx * self._mult[None, :]).sum(axis=1) + self._level_tag

    def locate_path(self, q: np.ndarray):
        """All stored cells on q's root path.

        Returns (group_positions, min_rung); positions index into uniq_keys,
        min_rung is +inf when the path hits nothing.
        """
        keys = self.path_keys(q)
        if len(keys) == 0:
            return np.zeros(0, dtype=np.int64), np.inf
        pos = np.searchsorted(self.uniq_keys, keys)
        ok = pos < len(self.uniq_keys)
        pos = pos[ok]
        hit = pos[self.uniq_keys[pos] == keys[ok]]
        if len(hit) == 0:
            return hit, np.inf
        return hit, int(self.group_min[hit].min())

    def candidates(self, hit_positions: np.ndarray, max_rung: int) -> np.ndarray:
        """Distinct fn ids labeled with rung <= max_rung on the given groups."""
        ends = self._ends
        parts = []
        for p in hit_positions:
            s, e = ends[p], ends[p + 1]
            sel = self.rungs[s:e] <= max_rung
            if sel.any():
                parts.append(self.fns[s:e][sel])
        if not parts:
            return np.zeros(0, dtype=np.int32)
        if len(parts) == 1:
            return np.unique(parts[0])
        return np.unique(np.concatenate(parts))

    def min_rung_of_fn_on_path(self, hit_positions: np.ndarray) -> dict[int, int]:
        ends = self._ends
        out: dict[int, int] = {}
        for p in hit_positions:
            s, e = ends[p], ends[p + 1]
            for fn, rung in zip(self.fns[s:e], self.rungs[s:e]):
                fn = int(fn)
                r = int(rung)
                if fn not in out or r < out[fn]:
                    out[fn] = r
        return out

    def iter_cells(self):
        """Yield (level, index tuple, [(fn, rung)...]) per stored cell."""
        ends = self._ends
        bits = self._bits
        mask = (np.int64(1) << bits) - 1
        for g, key in enumerate(self.uniq_keys):
            level = int(key >> np.int64(bits * self.dim))
            rest = int(key & ((np.int64(1) << np.int64(bits * self.dim)) - 1))
            idx = []
            for _ in range(self.dim):
                idx.append(rest & int(mask))
                rest >>= bits
            idx = tuple(reversed(idx))
            s, e = ends[g], ends[g + 1]
            entries = [(int(f), int(r)) for f, r in zip(self.fns[s:e], self.rungs[s:e])]
            yield level, idx, entries

    def to_labeled_cells(self, y_of_rung=None) -> list[LabeledCell]:
        out = []
        for level, idx, entries in self.iter_cells():
            for fn, rung in entries:
                y = float(rung) if y_of_rung is None else float(y_of_rung(rung))
                out.append(LabeledCell(CanonicalCell(level, idx), (fn, y, 0)))
        return out
