"""Interval-space object index and bound-guided search.

Each object becomes one or more rectangles in the space spanned by the
interval labelings of (a subset of) the attributes: one rectangle per
combination of its values, with multi-interval values of shared-node
hierarchies expanded the same way. An R-tree over the objects' enclosing
rectangles then supports a best-first search in which every entry carries,
per user, an upper bound on the matching vectors of the objects below it.

Leaf entries (single objects) carry their exact matching vectors. Node
entries get per-attribute bounds from the overlap between the user's
intervals and the entry's range on that attribute; attributes that are not
indexed, and users indifferent to an attribute, are bounded by 1.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dominance import (
    STANDARD,
    Counters,
    Window,
    first_dominator,
    first_dominators,
    scan_cost,
    threshold,
    user_counts,
)
from .model import JACCARD, Dataset, UserPrefs, degree_lookups, get_similarity
from .rtree import RTree, build_rstar, build_str, load_tree

__all__ = [
    "transform",
    "ObjectIndex",
    "build_index",
    "Query",
    "max_matching_degree",
    "entry_bounds",
    "score",
    "ind",
    "p_ind",
    "audit_bounds",
    "BoundViolation",
]


def transform(data: Dataset, o, attrs=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rectangles ``(lo, hi)`` of the virtual objects of ``o``.

    ``attrs`` selects the indexed attributes (all by default).
    """
    attrs = range(data.d) if attrs is None else attrs
    per_attr = []
    for k in attrs:
        lab = data.labelings[k]
        pieces = [iv for v in o.values[k] for iv in lab.intervals[v]]
        if not pieces:
            raise ValueError(f"object {o.object_id}: unlabeled value on attribute {k}")
        per_attr.append(pieces)
    rects = []
    for combo in product(*per_attr):
        rects.append((np.array([c[0] for c in combo], dtype=float), np.array([c[1] for c in combo], dtype=float)))
    return rects


def _object_mbrs(data: Dataset, attrs):
    n = len(data.objects)
    lo = np.empty((n, len(attrs)))
    hi = np.empty((n, len(attrs)))
    for col, k in enumerate(attrs):
        ivs = data.labelings[k].intervals
        for i, o in enumerate(data.objects):
            lo[i, col] = min(ivs[v][0][0] for v in o.values[k])
            hi[i, col] = max(ivs[v][-1][1] for v in o.values[k])
    return lo, hi


def _padded_ids(data: Dataset):
    out = []
    for k in range(data.d):
        width = max(len(o.values[k]) for o in data.objects)
        ids = np.full((len(data.objects), width), -1, dtype=np.int64)
        for i, o in enumerate(data.objects):
            ids[i, : len(o.values[k])] = o.values[k]
        out.append(ids)
    return out


@dataclass
class ObjectIndex:
    """R-tree over object rectangles plus the per-object payload.

    ``attrs`` lists the indexed attributes; the rest are reached through the
    object payload at the cost of one extra page read per leaf entry.
    """

    data: Dataset
    tree: RTree
    attrs: tuple[int, ...]
    value_ids: list[np.ndarray]
    objective_max: list[np.ndarray] = field(default_factory=list)
    size_max: list[np.ndarray] = field(default_factory=list)

    @property
    def subspace(self) -> bool:
        return len(self.attrs) < self.data.d

    def dump(self) -> str:
        return self.tree.dump()

    @classmethod
    def from_dump(cls, data: Dataset, text: str, attrs=None) -> "ObjectIndex":
        tree = load_tree(text)
        attrs = tuple(range(data.d)) if attrs is None else tuple(attrs)
        if tree.dims != len(attrs):
            raise ValueError(f"index has {tree.dims} dimensions, expected {len(attrs)}")
        return _finish(data, tree, attrs)


def _value_sizes(data, attrs):
    """Largest value cardinality of every object on each indexed attribute."""
    out = np.empty((len(data.objects), len(attrs)))
    for col, k in enumerate(attrs):
        size = {v: sum(b - a for a, b in ivs) for v, ivs in enumerate(data.labelings[k].intervals)}
        for i, o in enumerate(data.objects):
            out[i, col] = max(size[v] for v in o.values[k])
    return out


def _finish(data, tree, attrs):
    objv = np.array([o.objective for o in data.objects], dtype=float).reshape(len(data.objects), -1)
    sizes = _value_sizes(data, attrs)
    omax: list[np.ndarray] = [None] * len(tree.nodes)
    smax: list[np.ndarray] = [None] * len(tree.nodes)
    for nid, node in enumerate(tree.nodes):
        if node.is_leaf:
            omax[nid] = objv[node.children]
            smax[nid] = sizes[node.children]
        else:
            omax[nid] = np.array([omax[c].max(axis=0) for c in node.children])
            smax[nid] = np.array([smax[c].max(axis=0) for c in node.children])
    return ObjectIndex(data, tree, attrs, _padded_ids(data), omax, smax)


def build_index(data: Dataset, capacity: int = 64, attrs=None, method: str = "str") -> ObjectIndex:
    """Index the objects of ``data``.

    ``method`` is ``"str"`` (sort-tile-recursive bulk load, the default) or
    ``"rstar"`` (R*-tree insertion with forced reinsertion).
    """
    if not data.objects:
        raise ValueError("cannot index an empty object set")
    attrs = tuple(range(data.d)) if attrs is None else tuple(sorted(set(attrs)))
    if not attrs or not all(0 <= k < data.d for k in attrs):
        raise ValueError(f"bad indexed attribute list {attrs}")
    lo, hi = _object_mbrs(data, attrs)
    if method == "str":
        tree = build_str(lo, hi, capacity)
    elif method == "rstar":
        tree = build_rstar(lo, hi, capacity)
    else:
        raise ValueError(f"unknown build method {method!r}")
    return _finish(data, tree, attrs)


# --------------------------------------------------------------------------
# bounds


@dataclass
class _AttrUsers:
    """All user intervals on one attribute, flattened for vectorized overlap."""

    lo: np.ndarray  # (T,)
    hi: np.ndarray
    value_of: np.ndarray  # interval -> (user, value) slot
    slot_size: np.ndarray  # |y| per slot
    slot_user: np.ndarray  # slot -> user column
    n_slots: int


@dataclass
class Query:
    """Per-query state: users, similarity, degree lookups and interval tables."""

    index: ObjectIndex
    users: list[UserPrefs]
    f: object
    lookups: list
    specified: np.ndarray
    attr_users: dict
    multi: str = "max"
    size_cap: bool = True

    @classmethod
    def prepare(cls, index: ObjectIndex, users, f=JACCARD, multi="max", size_cap=True) -> "Query":
        data = index.data
        f = get_similarity(f)
        users = list(users)
        specified = np.array([[v is not None for v in u.values] for u in users], dtype=bool).reshape(len(users), data.d)
        attr_users = {}
        for k in index.attrs:
            ivs = data.labelings[k].intervals
            lo, hi, value_of, size, slot_user = [], [], [], [], []
            for j, u in enumerate(users):
                if u.values[k] is None:
                    continue
                for y in u.values[k]:
                    slot = len(size)
                    size.append(sum(b - a for a, b in ivs[y]))
                    slot_user.append(j)
                    for a, b in ivs[y]:
                        lo.append(a)
                        hi.append(b)
                        value_of.append(slot)
            attr_users[k] = _AttrUsers(np.array(lo, float), np.array(hi, float), np.array(value_of, np.int64),
                                       np.array(size, float), np.array(slot_user, np.int64), len(size))
        return cls(index, users, f, degree_lookups(data, users, f), specified, attr_users, multi, size_cap)

    @property
    def m(self):
        return len(self.users)

    def exact(self, objects: np.ndarray) -> np.ndarray:
        """Exact degrees ``(len(objects), m, d)`` from node lookup tables."""
        data = self.index.data
        out = np.ones((len(objects), self.m, data.d))
        for k in range(data.d):
            ids = self.index.value_ids[k][objects]
            mask = ids >= 0
            safe = np.where(mask, ids, 0)
            for j in range(self.m):
                table = self.lookups[k][j]
                if table is None:
                    continue
                vals = table[:, safe]
                if self.multi == "max":
                    out[:, j, k] = np.where(mask[None], vals, -np.inf).max(axis=(0, 2))
                elif self.multi == "min":
                    out[:, j, k] = np.where(mask[None], vals, np.inf).min(axis=(0, 2))
                else:
                    cnt = mask.sum(axis=1) * table.shape[0]
                    out[:, j, k] = np.where(mask[None], vals, 0.0).sum(axis=(0, 2)) / cnt
        return out


def entry_bounds(q: Query, lo: np.ndarray, hi: np.ndarray, size_max: np.ndarray | None = None) -> np.ndarray:
    """Upper bounds ``(c, m, d)`` for node entries with ranges ``[lo, hi)``.

    ``lo``/``hi`` are ``(c, len(attrs))`` in indexed-attribute order. The
    user-side overlap with the range bounds ``|x ∩ y|``; when ``size_max``
    (the largest object value cardinality below each entry) is given and
    ``q.size_cap`` is set, that bound is also capped by it, since
    ``|x ∩ y| <= |x|``. The bounds hold for every value pair, hence for
    min/avg aggregation too.
    """
    c = len(lo)
    d = q.index.data.d
    out = np.ones((c, q.m, d))
    for col, k in enumerate(q.index.attrs):
        au = q.attr_users[k]
        if not au.n_slots:
            continue
        elo, ehi = lo[:, col:col + 1], hi[:, col:col + 1]
        overlap = np.clip(np.minimum(ehi, au.hi[None]) - np.maximum(elo, au.lo[None]), 0.0, None)  # (c, T)
        inter = np.zeros((c, au.n_slots))
        np.add.at(inter.T, au.value_of, overlap.T)
        if q.size_cap and size_max is not None:
            inter = np.minimum(inter, size_max[:, col:col + 1])
        rng = (ehi - elo)
        slot_bound = q.f.upper_bound(inter, au.slot_size[None], rng)
        slot_bound = np.clip(slot_bound, 0.0, 1.0)
        per_user = np.full((c, q.m), -np.inf)
        np.maximum.at(per_user.T, au.slot_user, slot_bound.T)
        specified = q.specified[:, k]
        out[:, specified, k] = per_user[:, specified]
    return out


def max_matching_degree(q: Query, lo, hi, j: int, k: int, size_max=None) -> float:
    """Bound on user ``j``'s degree, attribute ``k``, for objects inside ``[lo, hi)``."""
    if size_max is not None:
        size_max = np.atleast_2d(np.asarray(size_max, float))
    b = entry_bounds(q, np.atleast_2d(np.asarray(lo, float)), np.atleast_2d(np.asarray(hi, float)), size_max)
    return float(b[0, j, k])


def score(bounds: np.ndarray, objective=None) -> np.ndarray:
    """Sum over users of the bound-vector norms (plus objective bounds)."""
    s = bounds.reshape(len(bounds), -1).sum(axis=1)
    if objective is not None and objective.shape[1]:
        s = s + objective.sum(axis=1)
    return s


# --------------------------------------------------------------------------
# search


BATCH = 256


class _Search:
    """Shared best-first machinery for the plain and p-variant searches."""

    def __init__(self, index, users, f, counters, prune, mode, multi, size_cap):
        self.index = index
        self.q = Query.prepare(index, users, f, multi, size_cap)
        self.counters = counters if counters is not None else Counters()
        self.prune = prune
        self.mode = mode
        self.m = self.q.m
        n = len(index.data.objects)
        n_obj = index.objective_max[index.tree.root].shape[1]
        self.cm = Window(self.m * index.data.d, n_obj, n, mode, self.counters, self.m)
        self.heap: list = []

    def _children(self, nid):
        """Bound vectors and objective bounds of the entries of node ``nid``."""
        node = self.index.tree.nodes[nid]
        if node.is_leaf:
            if self.index.subspace:
                self.counters.add_io(len(node))  # fetch non-indexed attributes
            bounds = self.q.exact(node.children)
        else:
            bounds = entry_bounds(self.q, node.lo, node.hi, self.index.size_max[nid])
        return node, bounds, self.index.objective_max[nid]

    def expand(self, nid):
        """Read node ``nid`` and push the children no CM member rules out."""
        self.counters.add_io(1)
        node, bounds, omax = self._children(nid)
        c = len(node)
        flat = bounds.reshape(c, -1)
        keep = np.ones(c, dtype=bool)
        w = len(self.cm)
        if self.prune and w:
            first = first_dominators(self.cm.rows[:w], self.cm.obj[:w], flat, omax, self.mode)
            self.counters.add_checks(int(np.where(first < 0, w, first + 1).sum()) * self.m)
            keep = first < 0
        scores = score(bounds, omax)
        kind = 1 if node.is_leaf else 0
        for i in np.flatnonzero(keep):
            item = (-float(scores[i]), kind, int(node.children[i]))
            payload = (flat[i], omax[i]) if node.is_leaf else None
            heapq.heappush(self.heap, (item, payload))

    def pop(self):
        (_, kind, ident), payload = heapq.heappop(self.heap)
        return kind, ident, payload

    def pop_objects(self, limit=BATCH):
        """Pop consecutive object entries from the top of the heap."""
        ids, rows, objs = [], [], []
        while self.heap and self.heap[0][0][1] == 1 and len(ids) < limit:
            kind, ident, (row, orow) = self.pop()
            ids.append(ident)
            rows.append(row)
            objs.append(orow)
        return np.array(ids, dtype=np.int64), np.array(rows), np.array(objs).reshape(len(ids), -1)


def ind(index: ObjectIndex, users=None, f=JACCARD, counters: Counters | None = None, prune=True,
        mode=STANDARD, multi="max", trace: list | None = None, size_cap=True) -> list[int]:
    """Collectively maximal objects by best-first search over the index.

    Returns object indices in the order they entered CM. With
    ``prune=False`` node entries are never discarded early; the answer is
    the same. ``trace`` (a list) receives ``("node", id)`` / ``("object",
    id)`` for every popped heap entry.

    Consecutive object entries at the top of the heap are checked against
    CM together; the outcome is the one of checking them one by one.
    """
    users = index.data.users if users is None else users
    s = _Search(index, users, f, counters, prune, mode, multi, size_cap)
    s.expand(index.tree.root)
    while s.heap:
        if s.heap[0][0][1] == 0:
            kind, ident, _ = s.pop()
            if trace is not None:
                trace.append(("node", ident))
            s.expand(ident)
            continue
        ids, rows, objs = s.pop_objects()
        if trace is not None:
            trace.extend(("object", int(i)) for i in ids)
        # evictions only matter when floating-point sums tie
        s.cm.offer(rows, objs, ids, evict=True)
    return list(s.cm.ids)


def p_ind(index: ObjectIndex, p, users=None, f=JACCARD, counters: Counters | None = None, prune=True,
          mode=STANDARD, multi="max", size_cap=True) -> tuple[list[int], list[int]]:
    """``(CM, pCM)`` in one search.

    Each popped object is compared with the CM members in order: a
    collective dominator ends the scan; before that, a p-dominator removes
    the object from pCM candidacy, and members of pCM it p-dominates are
    evicted from pCM.
    """
    users = index.data.users if users is None else users
    s = _Search(index, users, f, counters, prune, mode, multi, size_cap)
    k = threshold(p, max(1, s.m))
    d = index.data.d
    spec = s.q.specified
    pcm: set[int] = set()
    s.expand(index.tree.root)
    while s.heap:
        kind, ident, payload = s.pop()
        if kind == 0:
            s.expand(ident)
            continue
        row, orow = payload
        w = len(s.cm)
        in_pcm = True
        if w:
            cm_rows, cm_obj = s.cm.rows[:w], s.cm.obj[:w]
            cm_vals = cm_rows.reshape(w, s.m, d)
            target = row.reshape(s.m, d)
            hit = first_dominator(cm_rows, cm_obj, row, orow, mode)
            stop = w if hit < 0 else hit
            n_pref, strict = user_counts(cm_vals[:stop], cm_obj[:stop], target, orow, spec, mode)
            pdom = (n_pref >= k) & strict
            in_pcm = not pdom.any()
            members = [i for i in range(stop) if s.cm.ids[i] in pcm]
            if members:
                rp, rs = user_counts(cm_vals[members], cm_obj[members], target, orow, spec, mode, reverse=True)
                for i in np.asarray(members)[(rp >= k) & rs]:
                    pcm.discard(s.cm.ids[i])
            first_p = int(np.argmax(pdom)) if pdom.any() else stop
            n_checks = scan_cost(hit, w) + min(first_p + 1, stop) + len(members)
            s.counters.add_checks(n_checks * s.m)
            if hit >= 0:
                continue
        for x in s.cm.insert(row, orow, ident):
            pcm.discard(x)
        if in_pcm:
            pcm.add(ident)
    return list(s.cm.ids), [x for x in s.cm.ids if x in pcm]


# --------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class BoundViolation:
    node: int
    entry: int
    user: int
    attribute: int
    bound: float
    actual: float


def audit_bounds(index: ObjectIndex, users=None, f=JACCARD, multi="max", tol=0.0,
                 size_cap=True) -> list[BoundViolation]:
    """Every entry's bound against the true maximum over the objects below it.

    Returns the list of violations (empty when all bounds are sound).
    """
    users = index.data.users if users is None else users
    q = Query.prepare(index, users, f, multi, size_cap)
    tree = index.tree
    n = len(index.data.objects)
    exact = q.exact(np.arange(n))
    below_max: list[np.ndarray] = [None] * len(tree.nodes)
    out = []
    for nid, node in enumerate(tree.nodes):
        if node.is_leaf:
            bounds = q.exact(node.children)
            actual = exact[node.children]
            below_max[nid] = actual.max(axis=0)
        else:
            bounds = entry_bounds(q, node.lo, node.hi, index.size_max[nid])
            actual = np.array([below_max[c] for c in node.children])
            below_max[nid] = actual.max(axis=0)
        bad = np.argwhere(bounds < actual - tol)
        for e, j, k in bad:
            out.append(BoundViolation(nid, int(e), int(j), int(k), float(bounds[e, j, k]), float(actual[e, j, k])))
    return out
