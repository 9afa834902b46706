"""Per-user preference, collective and p-collective preference, and oracles.

A degree table ``V`` has shape ``(objects, users, d)``. Attributes a user is
indifferent to hold degree 1 for every object, so they never decide a
comparison; the ``specified`` mask is still honoured where it is given.

Standard strictness makes collective preference equal to plain Pareto
dominance on the concatenation of all users' vectors (plus objective
values), which is what the vectorized helpers exploit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import DegreeTable

__all__ = [
    "STANDARD",
    "LITERAL",
    "Preference",
    "DominanceConfig",
    "Counters",
    "threshold",
    "preferred",
    "user_relations",
    "collectively_preferred",
    "p_collectively_preferred",
    "dominates_rows",
    "dominated_by_rows",
    "first_dominator",
    "first_dominators",
    "scan_cost",
    "Window",
    "user_counts",
    "brute_force_cm",
    "brute_force_pcm",
    "leafset_degree_table",
]

STANDARD = "standard"
LITERAL = "literal_objective"


class Preference(enum.Enum):
    NEITHER = 0
    PREFERRED = 1
    STRICT = 2

    @property
    def is_preferred(self):
        return self is not Preference.NEITHER


def threshold(p, n_users: int) -> int:
    """``ceil(p/100 * n_users)`` in exact arithmetic."""
    p = Fraction(p)
    if not 0 < p <= 100:
        raise ValueError(f"p must lie in (0, 100], got {p}")
    if n_users < 1:
        raise ValueError("need at least one user")
    return math.ceil(p * n_users / 100)


@dataclass
class Counters:
    """Per-run work counters.

    ``dominance_checks`` counts per-user vector comparisons: comparing two
    composite records over ``m`` users costs ``m``.
    """

    dominance_checks: int = 0
    io_reads: int = 0

    def add_checks(self, n):
        self.dominance_checks += int(n)

    def add_io(self, n=1):
        self.io_reads += int(n)


@dataclass(frozen=True)
class DominanceConfig:
    p_percent: float = 100
    strictness_mode: str = STANDARD

    def __post_init__(self):
        if self.strictness_mode not in (STANDARD, LITERAL):
            raise ValueError(f"unknown strictness mode {self.strictness_mode!r}")
        threshold(self.p_percent, 1)

    def k(self, n_users):
        return threshold(self.p_percent, n_users)


def preferred(va, vb, specified=None, obj_a=(), obj_b=(), mode=STANDARD, counters=None) -> Preference:
    """Compare one user's matching vectors of two objects.

    ``obj_a``/``obj_b`` are objective attribute values (larger is better);
    they join the weak comparison and, depending on ``mode``, the strict one.
    """
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    if va.shape != vb.shape:
        raise ValueError(f"dimensionality mismatch: {va.shape} vs {vb.shape}")
    oa = np.asarray(obj_a, dtype=float)
    ob = np.asarray(obj_b, dtype=float)
    if oa.shape != ob.shape:
        raise ValueError("objective dimensionality mismatch")
    if counters is not None:
        counters.add_checks(1)
    if specified is not None:
        mask = np.asarray(specified, dtype=bool)
        va, vb = va[mask], vb[mask]
    if not (np.all(va >= vb) and np.all(oa >= ob)):
        return Preference.NEITHER
    subj = bool(np.any(va > vb))
    objv = bool(np.any(oa > ob))
    if mode == LITERAL and oa.size:
        strict = subj and objv
    else:
        strict = subj or objv
    return Preference.STRICT if strict else Preference.PREFERRED


def user_relations(table: DegreeTable, a: int, b: int, mode=STANDARD, counters=None):
    """Per user: (preferred, strictly preferred) of object ``a`` over ``b``."""
    prefs = [
        preferred(table.values[a, j], table.values[b, j], table.specified[j],
                  table.objective[a], table.objective[b], mode, counters)
        for j in range(table.n_users)
    ]
    pref = np.array([p.is_preferred for p in prefs], dtype=bool)
    strict = np.array([p is Preference.STRICT for p in prefs], dtype=bool)
    return pref, strict


def collectively_preferred(table: DegreeTable, a: int, b: int, mode=STANDARD, counters=None) -> bool:
    """Every user prefers ``a`` over ``b`` and at least one strictly."""
    pref, strict = user_relations(table, a, b, mode, counters)
    return bool(pref.all() and strict.any())


def p_collectively_preferred(table: DegreeTable, a: int, b: int, p, mode=STANDARD, counters=None) -> bool:
    """At least ``ceil(p|U|/100)`` users prefer ``a``, at least one strictly.

    A strictly preferring user also prefers, so it can always be placed in a
    preferring subset of the required size.
    """
    k = threshold(p, table.n_users)
    pref, strict = user_relations(table, a, b, mode, counters)
    return bool(pref.sum() >= k and strict.any())


# --------------------------------------------------------------------------
# vectorized composite comparisons


def _strict_any(gt_subj, gt_obj, mode, n_obj):
    if mode == LITERAL and n_obj:
        return gt_subj & gt_obj
    return gt_subj | gt_obj


def dominates_rows(rows, rows_obj, target, target_obj, mode=STANDARD):
    """Mask of ``rows`` (composite, ``(n, m*d)``) collectively preferred over ``target``."""
    ge = np.all(rows >= target, axis=1)
    if rows_obj.shape[1]:
        ge &= np.all(rows_obj >= target_obj, axis=1)
    gt_s = np.any(rows > target, axis=1)
    gt_o = np.any(rows_obj > target_obj, axis=1) if rows_obj.shape[1] else np.zeros(len(rows), bool)
    return ge & _strict_any(gt_s, gt_o, mode, rows_obj.shape[1])


def dominated_by_rows(rows, rows_obj, source, source_obj, mode=STANDARD):
    """Mask of ``rows`` that ``source`` is collectively preferred over."""
    ge = np.all(source >= rows, axis=1)
    if rows_obj.shape[1]:
        ge &= np.all(source_obj >= rows_obj, axis=1)
    gt_s = np.any(source > rows, axis=1)
    gt_o = np.any(source_obj > rows_obj, axis=1) if rows_obj.shape[1] else np.zeros(len(rows), bool)
    return ge & _strict_any(gt_s, gt_o, mode, rows_obj.shape[1])


def first_dominator(rows, rows_obj, target, target_obj, mode=STANDARD, chunk=256) -> int:
    """Index of the first row collectively preferred over ``target``, or -1.

    Rows are scanned in chunks, so the work stops soon after the first hit
    like a sequential scan with an early exit.
    """
    for start in range(0, len(rows), chunk):
        hit = dominates_rows(rows[start: start + chunk], rows_obj[start: start + chunk], target, target_obj, mode)
        if hit.any():
            return start + int(np.argmax(hit))
    return -1


def first_dominators(rows, rows_obj, targets, targets_obj, mode=STANDARD, chunk=64) -> np.ndarray:
    """For each target row, the index of its first dominating row in ``rows`` (or -1)."""
    out = np.full(len(targets), -1, dtype=np.int64)
    live = np.arange(len(targets))
    n_obj = rows_obj.shape[1]
    for start in range(0, len(rows), chunk):
        if not len(live):
            break
        R = rows[start: start + chunk][:, None, :]
        T = targets[live][None, :, :]
        ge = np.all(R >= T, axis=2)
        gt = np.any(R > T, axis=2)
        if n_obj:
            RO = rows_obj[start: start + chunk][:, None, :]
            TO = targets_obj[live][None, :, :]
            ge &= np.all(RO >= TO, axis=2)
            ogt = np.any(RO > TO, axis=2)
            gt = (gt & ogt) if mode == LITERAL else (gt | ogt)
        hit = ge & gt  # (chunk rows, live targets)
        found = hit.any(axis=0)
        if found.any():
            out[live[found]] = start + np.argmax(hit[:, found], axis=0)
            live = live[~found]
    return out


def scan_cost(first_index, n_rows) -> int:
    """Rows a sequential scan touches before stopping at ``first_index``."""
    return n_rows if first_index < 0 else first_index + 1


class Window:
    """An ordered set of mutually non-dominated composite records.

    :meth:`offer` feeds candidates in stream order. The result equals
    handling them one at a time (drop a candidate some member beats, else
    optionally evict the members it beats, then insert), but candidates are
    first screened in bulk against the members present when the batch
    starts: if such a member beats a candidate, so does whatever member
    replaces it later, so the screen never changes the outcome.

    ``checks_per_pair`` is added to ``counters`` for every candidate-member
    pair examined.
    """

    def __init__(self, width, n_obj, capacity, mode=STANDARD, counters=None, checks_per_pair=1):
        self.rows = np.empty((capacity, width))
        self.obj = np.empty((capacity, n_obj))
        self.ids: list[int] = []
        self.tags: list = []
        self.capacity = capacity
        self.mode = mode
        self.counters = counters if counters is not None else Counters()
        self.cpp = checks_per_pair

    def __len__(self):
        return len(self.ids)

    @property
    def full(self):
        return len(self.ids) >= self.capacity

    def _keep(self, keep):
        keep = np.asarray(keep, dtype=np.int64)
        n = len(keep)
        self.rows[:n] = self.rows[keep]
        self.obj[:n] = self.obj[keep]
        self.ids = [self.ids[i] for i in keep]
        self.tags = [self.tags[i] for i in keep]

    def remove_where(self, pred) -> list:
        """Drop members whose tag satisfies ``pred``; returns their ids in order."""
        gone = [i for i, t in enumerate(self.tags) if pred(t)]
        if gone:
            out = [self.ids[i] for i in gone]
            drop = set(gone)
            self._keep([i for i in range(len(self.ids)) if i not in drop])
            return out
        return []

    def dominated(self, row, orow) -> bool:
        w = len(self.ids)
        if not w:
            return False
        hit = first_dominator(self.rows[:w], self.obj[:w], row, orow, self.mode)
        self.counters.add_checks(scan_cost(hit, w) * self.cpp)
        return hit >= 0

    def insert(self, row, orow, ident, evict=True, tag=None) -> list:
        """Insert a record already known to be undominated; returns evicted ids."""
        w = len(self.ids)
        gone = []
        if evict and w:
            beaten = dominated_by_rows(self.rows[:w], self.obj[:w], row, orow, self.mode)
            if beaten.any():
                gone = [self.ids[i] for i in np.flatnonzero(beaten)]
                self._keep(np.flatnonzero(~beaten))
                w = len(self.ids)
        if w >= self.capacity:
            raise OverflowError("window is full")
        self.rows[w] = row
        self.obj[w] = orow
        self.ids.append(int(ident))
        self.tags.append(tag)
        return gone

    def offer(self, rows, objs, ids, evict=True, tag=None, overflow=None) -> list:
        """Process candidates in order; returns ids of those inserted.

        ``tag(i)`` gives the tag stored with candidate ``i``. When the window
        is full, a surviving candidate is passed to ``overflow(i)`` instead
        of being inserted (evictions it causes still happen).
        """
        w0 = len(self.ids)
        n = len(ids)
        if n == 0:
            return []
        if w0:
            first = first_dominators(self.rows[:w0], self.obj[:w0], rows, objs, self.mode)
            cost = np.where(first < 0, w0, first + 1)
            self.counters.add_checks(int(cost.sum()) * self.cpp)
            survivors = np.flatnonzero(first < 0)
        else:
            survivors = np.arange(n)
        inserted = []
        for i in survivors:
            w = len(self.ids)
            # members added during this batch were not screened above
            if w > w0:
                new = slice(w0, w)
                hit = first_dominator(self.rows[new], self.obj[new], rows[i], objs[i], self.mode)
                self.counters.add_checks(scan_cost(hit, w - w0) * self.cpp)
                if hit >= 0:
                    continue
            if evict and w:
                beaten = dominated_by_rows(self.rows[:w], self.obj[:w], rows[i], objs[i], self.mode)
                if beaten.any():
                    keep = np.flatnonzero(~beaten)
                    w0 -= int(np.count_nonzero(beaten[:w0]))
                    self._keep(keep)
            if self.full:
                if overflow is None:
                    raise OverflowError("window is full")
                overflow(int(i))
                continue
            w = len(self.ids)
            self.rows[w] = rows[i]
            self.obj[w] = objs[i]
            self.ids.append(int(ids[i]))
            self.tags.append(tag(int(i)) if tag is not None else None)
            inserted.append(int(ids[i]))
        return inserted


def user_counts(values, objective, target, target_obj, specified, mode=STANDARD, reverse=False):
    """For candidate objects ``values`` (``(n, m, d)``) against one target.

    Returns ``(n_preferring, any_strict)`` per candidate: how many users
    prefer the candidate over the target and whether any of them strictly.
    With ``reverse`` the roles swap: users preferring the target over each
    candidate.
    """
    spec = specified[None]
    hi, lo = (target[None], values) if reverse else (values, target[None])
    ge = np.all((hi >= lo) | ~spec, axis=2)
    gt = np.any((hi > lo) & spec, axis=2)
    if objective.shape[1]:
        ohi, olo = (target_obj[None], objective) if reverse else (objective, target_obj[None])
        oge = np.all(ohi >= olo, axis=1)[:, None]
        ogt = np.any(ohi > olo, axis=1)[:, None]
        ge = ge & oge
        gt = (gt & ogt) if mode == LITERAL else (gt | ogt)
    strict = ge & gt
    return ge.sum(axis=1), strict.any(axis=1)


# --------------------------------------------------------------------------
# oracles


def _relation_matrices(table: DegreeTable, b: int, mode):
    """Per (candidate a, user j): a preferred / strictly preferred over b, from the definitions."""
    V = table.values
    spec = table.specified
    pref = np.ones((table.n_objects, table.n_users), dtype=bool)
    strict = np.zeros((table.n_objects, table.n_users), dtype=bool)
    for j in range(table.n_users):
        for k in range(table.d):
            if not spec[j, k]:
                continue
            pref[:, j] &= V[:, j, k] >= V[b, j, k]
            strict[:, j] |= V[:, j, k] > V[b, j, k]
    obj = table.objective
    if obj.shape[1]:
        oge = np.all(obj >= obj[b], axis=1)
        ogt = np.any(obj > obj[b], axis=1)
        pref &= oge[:, None]
        strict = (strict & ogt[:, None]) if mode == LITERAL else (strict | ogt[:, None])
    return pref, strict & pref


def brute_force_cm(table: DegreeTable, mode=STANDARD) -> list[int]:
    """Indices of objects with no collectively preferred rival, by full pairwise scan."""
    out = []
    for b in range(table.n_objects):
        pref, strict = _relation_matrices(table, b, mode)
        dom = pref.all(axis=1) & strict.any(axis=1)
        if not dom.any():
            out.append(b)
    return out


def brute_force_pcm(table: DegreeTable, p, mode=STANDARD, cm=None) -> list[int]:
    """Indices of collectively maximal objects with no p-collectively preferred rival in CM."""
    k = threshold(p, table.n_users)
    cm = brute_force_cm(table, mode) if cm is None else list(cm)
    cm_set = np.zeros(table.n_objects, dtype=bool)
    cm_set[cm] = True
    out = []
    for b in cm:
        pref, strict = _relation_matrices(table, b, mode)
        dom = (pref.sum(axis=1) >= k) & strict.any(axis=1) & cm_set
        if not dom.any():
            out.append(b)
    return out


def leafset_degree_table(data, f="jaccard", objects=None, users=None) -> DegreeTable:
    """Degrees from explicit leaf sets found by graph search.

    Shares no code with the interval route: every value becomes the set of
    leaves reachable from it and each multi-valued object is expanded into
    its virtual objects, whose per-attribute degrees are then maximised.
    """
    from itertools import product

    from .model import get_similarity

    f = get_similarity(f)
    objects = data.objects if objects is None else objects
    users = data.users if users is None else users
    leafsets = [{} for _ in range(data.d)]

    def leaves(k, v):
        if v not in leafsets[k]:
            leafsets[k][v] = data.hierarchies[k].reachable_leaves(v)
        return leafsets[k][v]

    V = np.ones((len(objects), len(users), data.d))
    for i, o in enumerate(objects):
        virtuals = list(product(*o.values))
        for j, u in enumerate(users):
            for k in range(data.d):
                if u.values[k] is None:
                    continue
                best = 0.0
                for virt in virtuals:
                    x = leaves(k, virt[k])
                    for y_node in u.values[k]:
                        y = leaves(k, y_node)
                        best = max(best, f(len(x), len(x & y), len(x | y), len(y)))
                V[i, j, k] = best
    spec = np.array([[v is not None for v in u.values] for u in users], dtype=bool).reshape(len(users), data.d)
    objv = np.array([o.objective for o in objects], dtype=float).reshape(len(objects), len(data.objective))
    return DegreeTable(V, spec, objv, [o.object_id for o in objects], [u.user_id for u in users])
