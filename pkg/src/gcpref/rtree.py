"""A static R-tree over axis-aligned boxes.

Two builders are offered: sort-tile-recursive packing (default, fully
deterministic for a fixed input order) and one-by-one R*-tree insertion with
forced reinsertion. Nodes are stored flat; node ids are positions in
``RTree.nodes`` and the root is always the last node.

Dump format (line based, round trip stable)::

    #format<TAB>gcp-index<TAB>1
    dims D capacity C nodes N root R
    node <id> <level> <count>
    <child> <lo_1> ... <lo_D> <hi_1> ... <hi_D>
    ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Node", "RTree", "str_pack", "build_str", "build_rstar", "load_tree"]

DUMP_HEADER = "#format\tgcp-index\t1"


@dataclass
class Node:
    """``level`` 0 holds item ids in ``children``; higher levels hold node ids."""

    level: int
    children: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __len__(self):
        return len(self.children)

    @property
    def is_leaf(self):
        return self.level == 0

    def mbr(self):
        return self.lo.min(axis=0), self.hi.max(axis=0)


@dataclass
class RTree:
    nodes: list[Node]
    capacity: int
    dims: int
    extra: dict = field(default_factory=dict)

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def height(self) -> int:
        return self.nodes[self.root].level + 1

    def __len__(self):
        return len(self.nodes)

    def leaf_items(self, node_id=None):
        """Item ids below ``node_id`` (whole tree by default)."""
        node_id = self.root if node_id is None else node_id
        out, stack = [], [node_id]
        while stack:
            n = self.nodes[stack.pop()]
            if n.is_leaf:
                out.extend(int(c) for c in n.children)
            else:
                stack.extend(int(c) for c in n.children)
        return out

    def parent_map(self):
        parent = {}
        for nid, n in enumerate(self.nodes):
            if not n.is_leaf:
                for c in n.children:
                    parent[int(c)] = nid
        return parent

    def dump(self) -> str:
        lines = [DUMP_HEADER, f"dims {self.dims} capacity {self.capacity} nodes {len(self.nodes)} root {self.root}"]
        for nid, n in enumerate(self.nodes):
            lines.append(f"node {nid} {n.level} {len(n)}")
            for c, lo, hi in zip(n.children, n.lo, n.hi):
                lines.append(" ".join([str(int(c))] + [_num(x) for x in lo] + [_num(x) for x in hi]))
        return "\n".join(lines) + "\n"


def _num(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def load_tree(text: str) -> RTree:
    lines = text.splitlines()
    if not lines or lines[0] != DUMP_HEADER:
        raise ValueError("not an index dump (missing format line)")
    head = lines[1].split()
    meta = dict(zip(head[0::2], head[1::2]))
    dims, cap, n_nodes = int(meta["dims"]), int(meta["capacity"]), int(meta["nodes"])
    nodes, pos = [], 2
    for _ in range(n_nodes):
        tag, nid, level, count = lines[pos].split()
        if tag != "node" or int(nid) != len(nodes):
            raise ValueError(f"line {pos + 1}: expected node {len(nodes)}")
        rows = [ln.split() for ln in lines[pos + 1: pos + 1 + int(count)]]
        pos += 1 + int(count)
        arr = np.array([[float(x) for x in r[1:]] for r in rows], dtype=float).reshape(int(count), 2 * dims)
        nodes.append(Node(int(level), np.array([int(r[0]) for r in rows], dtype=np.int64),
                          arr[:, :dims], arr[:, dims:]))
    if int(meta["root"]) != len(nodes) - 1:
        raise ValueError("root must be the last node")
    return RTree(nodes, cap, dims)


# --------------------------------------------------------------------------
# sort-tile-recursive packing


def str_pack(centers: np.ndarray, capacity: int) -> list[np.ndarray]:
    """Group rows of ``centers`` into runs of at most ``capacity``.

    Classic STR: with ``P = ceil(n/capacity)`` pages, sort on the first
    dimension, cut into ``ceil(P^(1/D))`` slabs of whole pages, recurse on
    the remaining dimensions. Only the last run of a slab can be partly
    filled, and the number of runs is exactly ``P``.
    """
    n, dims = centers.shape
    groups: list[np.ndarray] = []

    def tile(idx, dim):
        m = len(idx)
        pages = math.ceil(m / capacity)
        order = idx[np.argsort(centers[idx, dim], kind="stable")]
        remaining = dims - dim
        if pages <= 1 or remaining <= 1:
            for start in range(0, m, capacity):
                groups.append(order[start: start + capacity])
            return
        slabs = max(1, min(math.ceil(pages ** (1.0 / remaining) - 1e-9), pages))
        per_slab = math.ceil(pages / slabs) * capacity
        for start in range(0, m, per_slab):
            tile(order[start: start + per_slab], dim + 1)

    if n:
        tile(np.arange(n), 0)
    return groups


def build_str(lo, hi, capacity=64) -> RTree:
    """Bulk-load boxes ``[lo, hi)`` (arrays ``(n, D)``) bottom-up."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.ndim != 2 or lo.shape != hi.shape:
        raise ValueError("lo/hi must be matching (n, D) arrays")
    if len(lo) == 0:
        raise ValueError("cannot index an empty set")
    if capacity < 2:
        raise ValueError("capacity must be at least 2")
    nodes: list[Node] = []
    ids = np.arange(len(lo))
    level = 0
    cur_lo, cur_hi = lo, hi
    while True:
        groups = str_pack((cur_lo + cur_hi) / 2.0, capacity)
        first = len(nodes)
        for g in groups:
            nodes.append(Node(level, ids[g].astype(np.int64), cur_lo[g], cur_hi[g]))
        if len(groups) == 1:
            break
        made = nodes[first:]
        cur_lo = np.array([n.lo.min(axis=0) for n in made])
        cur_hi = np.array([n.hi.max(axis=0) for n in made])
        ids = np.arange(first, len(nodes))
        level += 1
    return RTree(nodes, capacity, lo.shape[1])


# --------------------------------------------------------------------------
# R*-tree insertion


class _MNode:
    __slots__ = ("level", "children", "lo", "hi")

    def __init__(self, level):
        self.level = level
        self.children: list = []  # item ids or _MNode
        self.lo: list = []
        self.hi: list = []

    def mbr(self):
        return np.min(self.lo, axis=0), np.max(self.hi, axis=0)


def _area(lo, hi):
    return float(np.prod(np.maximum(hi - lo, 0.0)))


def _margin(lo, hi):
    return float(np.sum(hi - lo))


def _overlap(alo, ahi, blo, bhi):
    return float(np.prod(np.maximum(np.minimum(ahi, bhi) - np.maximum(alo, blo), 0.0)))


class _RStar:
    def __init__(self, dims, capacity, reinsert_frac=0.3, min_frac=0.4):
        self.dims = dims
        self.M = capacity
        self.m = max(1, int(math.floor(min_frac * capacity)))
        self.p = max(1, int(round(reinsert_frac * capacity)))
        self.root = _MNode(0)

    def insert(self, item, lo, hi):
        self._reinserted = set()
        self._insert(item, lo, hi, 0)

    def _insert(self, item, lo, hi, level):
        path = self._choose(lo, hi, level)
        node = path[-1]
        node.children.append(item)
        node.lo.append(lo)
        node.hi.append(hi)
        self._fix(path)

    def _choose(self, lo, hi, level):
        node, path = self.root, [self.root]
        while node.level > level:
            los, his = np.array(node.lo), np.array(node.hi)
            nlo, nhi = np.minimum(los, lo), np.maximum(his, hi)
            areas = np.prod(his - los, axis=1)
            enlarge = np.prod(nhi - nlo, axis=1) - areas
            if node.level == 1:
                # children are leaves: minimise overlap enlargement
                best, best_key = 0, None
                for i in range(len(node.children)):
                    before = sum(_overlap(los[i], his[i], los[j], his[j]) for j in range(len(los)) if j != i)
                    after = sum(_overlap(nlo[i], nhi[i], los[j], his[j]) for j in range(len(los)) if j != i)
                    key = (after - before, enlarge[i], areas[i], i)
                    if best_key is None or key < best_key:
                        best, best_key = i, key
            else:
                best = min(range(len(node.children)), key=lambda i: (enlarge[i], areas[i], i))
            node = node.children[best]
            path.append(node)
        return path

    def _fix(self, path):
        for depth in range(len(path) - 1, -1, -1):
            node = path[depth]
            if len(node.children) > self.M:
                if depth > 0 and node.level not in self._reinserted:
                    self._reinserted.add(node.level)
                    self._reinsert(node, path[: depth + 1])
                    return
                a, b = self._split(node)
                if depth == 0:
                    self.root = _MNode(node.level + 1)
                    for part in (a, b):
                        plo, phi = part.mbr()
                        self.root.children.append(part)
                        self.root.lo.append(plo)
                        self.root.hi.append(phi)
                    return
                parent = path[depth - 1]
                i = parent.children.index(node)
                alo, ahi = a.mbr()
                blo, bhi = b.mbr()
                parent.children[i], parent.lo[i], parent.hi[i] = a, alo, ahi
                parent.children.append(b)
                parent.lo.append(blo)
                parent.hi.append(bhi)
            elif depth > 0:
                parent = path[depth - 1]
                i = parent.children.index(node)
                parent.lo[i], parent.hi[i] = node.mbr()

    def _reinsert(self, node, path):
        lo, hi = node.mbr()
        center = (lo + hi) / 2.0
        cs = (np.array(node.lo) + np.array(node.hi)) / 2.0
        dist = np.sum((cs - center) ** 2, axis=1)
        order = np.argsort(-dist, kind="stable")
        out = set(order[: self.p].tolist())
        removed = [(node.children[i], node.lo[i], node.hi[i]) for i in order[: self.p]]
        keep = [i for i in range(len(node.children)) if i not in out]
        node.children = [node.children[i] for i in keep]
        node.lo = [node.lo[i] for i in keep]
        node.hi = [node.hi[i] for i in keep]
        for depth in range(len(path) - 1, 0, -1):
            parent, child = path[depth - 1], path[depth]
            i = parent.children.index(child)
            parent.lo[i], parent.hi[i] = child.mbr()
        for item, ilo, ihi in reversed(removed):
            self._insert(item, ilo, ihi, node.level)

    def _split(self, node):
        los, his = np.array(node.lo), np.array(node.hi)
        n, M, m = len(los), self.M, self.m
        best_axis, best_margin, best_sorts = 0, None, None
        for axis in range(self.dims):
            sorts = [np.lexsort((his[:, axis], los[:, axis])), np.lexsort((los[:, axis], his[:, axis]))]
            margin = 0.0
            for order in sorts:
                for k in range(m, n - m + 1):
                    a, b = order[:k], order[k:]
                    margin += _margin(los[a].min(0), his[a].max(0)) + _margin(los[b].min(0), his[b].max(0))
            if best_margin is None or margin < best_margin:
                best_axis, best_margin, best_sorts = axis, margin, sorts
        best, best_key = None, None
        for order in best_sorts:
            for k in range(m, n - m + 1):
                a, b = order[:k], order[k:]
                alo, ahi, blo, bhi = los[a].min(0), his[a].max(0), los[b].min(0), his[b].max(0)
                key = (_overlap(alo, ahi, blo, bhi), _area(alo, ahi) + _area(blo, bhi))
                if best_key is None or key < best_key:
                    best, best_key = (a, b), key
        parts = []
        for idx in best:
            part = _MNode(node.level)
            part.children = [node.children[i] for i in idx]
            part.lo = [node.lo[i] for i in idx]
            part.hi = [node.hi[i] for i in idx]
            parts.append(part)
        return parts


def build_rstar(lo, hi, capacity=64) -> RTree:
    """Insert boxes one at a time with R*-tree heuristics, then flatten."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if len(lo) == 0:
        raise ValueError("cannot index an empty set")
    if capacity < 4:
        raise ValueError("R*-insertion needs capacity >= 4")
    t = _RStar(lo.shape[1], capacity)
    for i in range(len(lo)):
        t.insert(i, lo[i], hi[i])
    nodes: list[Node] = []

    def flatten(mn):
        if mn.level == 0:
            kids = np.array(mn.children, dtype=np.int64)
        else:
            kids = np.array([flatten(c) for c in mn.children], dtype=np.int64)
        nodes.append(Node(mn.level, kids, np.array(mn.lo, dtype=float), np.array(mn.hi, dtype=float)))
        return len(nodes) - 1

    flatten(t.root)
    return RTree(nodes, capacity, lo.shape[1])
