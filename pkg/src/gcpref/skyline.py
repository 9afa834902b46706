"""Baseline pipeline: composite records plus an inner skyline algorithm.

Every object becomes one composite record holding its matching vectors for
all users side by side. Collective preference between objects is then
ordinary Pareto dominance between records, so any skyline algorithm
answers the group query. Three inner algorithms are provided (block nested
loops, sort-filter, branch-and-bound), all driven through a simulated
paged file so that page transfers can be counted.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .dominance import STANDARD, Counters, Window, threshold, user_counts
from .model import JACCARD, DegreeTable, degree_table
from .rtree import build_str

__all__ = [
    "PageModel",
    "CompositeRecords",
    "composite_records",
    "bnl_skyline",
    "sfs_skyline",
    "bbs_skyline",
    "bsl",
    "p_bsl",
    "pcm_filter",
    "INNER",
]


@dataclass(frozen=True)
class PageModel:
    """``records_per_page`` object records fit on one page.

    A composite record carries one matching vector per user, so it takes
    as much room as ``n_users`` object records.
    """

    records_per_page: int = 100

    def pages(self, n_records: int, width: int = 1) -> int:
        per_page = max(1, self.records_per_page // max(1, width))
        return math.ceil(n_records / per_page)


@dataclass
class CompositeRecords:
    """Rows of ``flat`` are composite records; ``obj`` holds objective values."""

    flat: np.ndarray
    obj: np.ndarray
    n_users: int
    d: int
    mode: str = STANDARD

    def __len__(self):
        return len(self.flat)

    def key(self) -> np.ndarray:
        """Monotone sort key: total of all degrees and objective values."""
        return self.flat.sum(axis=1) + self.obj.sum(axis=1)

    def user_norms(self) -> np.ndarray:
        return self.flat.reshape(len(self.flat), self.n_users, self.d).sum(axis=2)


def composite_records(table: DegreeTable, mode=STANDARD) -> CompositeRecords:
    return CompositeRecords(table.composite().copy(), table.objective, table.n_users, table.d, mode)


BATCH = 256


def bnl_skyline(R: CompositeRecords, counters: Counters | None = None, window: int = 10_000,
                pages: PageModel = PageModel()) -> list[int]:
    """Block nested loops with a bounded window and overflow passes.

    Records that find no room in the window go to a temporary file that
    is re-scanned in the next pass. Window entries are tagged with the pass
    and temp-file position at which they were inserted; once the next pass
    reaches that position they have met every record and are emitted.
    """
    counters = counters if counters is not None else Counters()
    m = R.n_users
    if window < 1:
        raise ValueError("window must hold at least one record")
    counters.add_io(pages.pages(len(R), m))  # first scan of the record file
    flat, obj = R.flat, R.obj
    win = Window(flat.shape[1], obj.shape[1], window, R.mode, counters, m)
    out: list[int] = []
    inp = np.arange(len(R))
    npass = 0
    while len(inp):
        temp: list[int] = []
        prev = npass - 1
        for s in range(0, len(inp), BATCH):
            if npass:
                out.extend(win.remove_where(lambda t: t[0] == prev and t[1] <= s))
            chunk = inp[s: s + BATCH]
            win.offer(flat[chunk], obj[chunk], chunk, evict=True,
                      tag=lambda i: (npass, len(temp)),
                      overflow=lambda i: temp.append(int(chunk[i])))
        # entries from the previous pass have now seen the whole temp file
        out.extend(win.remove_where(lambda t: t[0] == prev))
        if not temp:
            out.extend(win.ids)
            break
        counters.add_io(2 * pages.pages(len(temp), m))  # write the temp file, read it back
        inp = np.array(temp, dtype=np.int64)
        npass += 1
    return out


def sfs_skyline(R: CompositeRecords, counters: Counters | None = None,
                pages: PageModel = PageModel()) -> list[int]:
    """Sort by the monotone key (descending), then filter in one pass.

    A record can only be dominated by one with a larger key, so the
    skyline grows append-only; ties in floating-point keys are guarded by
    also dropping any member the new record dominates.
    """
    counters = counters if counters is not None else Counters()
    m = R.n_users
    counters.add_io(3 * pages.pages(len(R), m))  # read records, write the sorted run, read it back
    order = np.lexsort((np.arange(len(R)), -R.key()))
    win = Window(R.flat.shape[1], R.obj.shape[1], max(1, len(R)), R.mode, counters, m)
    for s in range(0, len(order), BATCH):
        chunk = order[s: s + BATCH]
        win.offer(R.flat[chunk], R.obj[chunk], chunk, evict=True)
    return list(win.ids)


def bbs_skyline(R: CompositeRecords, counters: Counters | None = None, capacity: int = 64,
                pages: PageModel = PageModel()) -> list[int]:
    """Branch-and-bound over an index of per-user norm points.

    The index key space has one dimension per user (that user's vector
    norm), plus one per objective attribute. Entries are visited by the
    sum of their upper corner. Since norm-space dominance does not imply
    collective preference, each node also keeps the coordinatewise maximum
    of the composite records below it; a node is discarded only when a
    skyline member is collectively preferred over that maximum.
    """
    counters = counters if counters is not None else Counters()
    m = R.n_users
    counters.add_io(pages.pages(len(R), m))  # scan records to build the index
    if len(R) == 0:
        return []
    pts = np.hstack([R.user_norms(), R.obj])
    tree = build_str(pts, pts, capacity)
    counters.add_io(len(tree.nodes))  # index pages written
    flat, obj = R.flat, R.obj
    # composite upper corner per node, bottom-up (children precede parents)
    cmax = [None] * len(tree.nodes)
    omax = [None] * len(tree.nodes)
    for nid, node in enumerate(tree.nodes):
        if node.is_leaf:
            cmax[nid] = flat[node.children].max(axis=0)
            omax[nid] = obj[node.children].max(axis=0)
        else:
            cmax[nid] = np.max([cmax[c] for c in node.children], axis=0)
            omax[nid] = np.max([omax[c] for c in node.children], axis=0)
    win = Window(flat.shape[1], obj.shape[1], len(R), R.mode, counters, m)
    # heap items: (-key, kind, id); kind 0 = node, 1 = record, so nodes with
    # equal key expand first and equal-key records pop by id
    root = tree.root
    heap = [(-float(tree.nodes[root].hi.max(axis=0).sum()), 0, root)]
    while heap:
        if heap[0][1] == 1:
            # a run of records: filter them together, in pop order
            run = []
            while heap and heap[0][1] == 1 and len(run) < BATCH:
                run.append(heapq.heappop(heap)[2])
            run = np.array(run, dtype=np.int64)
            win.offer(flat[run], obj[run], run, evict=True)
            continue
        _, _, ident = heapq.heappop(heap)
        if win.dominated(cmax[ident], omax[ident]):
            continue
        counters.add_io(1)
        node = tree.nodes[ident]
        keys = node.hi.sum(axis=1)
        for c, k in zip(node.children, keys):
            c = int(c)
            if node.is_leaf:
                heapq.heappush(heap, (-float(k), 1, c))
            elif not win.dominated(cmax[c], omax[c]):
                heapq.heappush(heap, (-float(k), 0, c))
    return list(win.ids)


INNER = {"bnl": bnl_skyline, "sfs": sfs_skyline, "bbs": bbs_skyline}


def _run_inner(R, inner, counters, pages, window, capacity):
    inner = inner.lower()
    if inner == "bnl":
        return bnl_skyline(R, counters, window=window, pages=pages)
    if inner == "sfs":
        return sfs_skyline(R, counters, pages=pages)
    if inner == "bbs":
        return bbs_skyline(R, counters, capacity=capacity, pages=pages)
    raise ValueError(f"unknown inner skyline algorithm {inner!r}; expected bnl, sfs or bbs")


def bsl(data_or_table, users=None, f=JACCARD, inner="bnl", counters: Counters | None = None,
        pages: PageModel = PageModel(), window=10_000, capacity=64, mode=STANDARD,
        multi="max") -> list[int]:
    """Collectively maximal objects by the baseline pipeline.

    Accepts a :class:`~gcpref.model.Dataset` (degrees are computed here, as
    part of the run) or a ready :class:`DegreeTable`. Returns object
    indices in ascending order.
    """
    counters = counters if counters is not None else Counters()
    if inner.lower() not in INNER:
        raise ValueError(f"unknown inner skyline algorithm {inner!r}; expected bnl, sfs or bbs")
    if isinstance(data_or_table, DegreeTable):
        table = data_or_table
    else:
        data = data_or_table
        table = degree_table(data, users=users, f=f, multi=multi)
        counters.add_io(pages.pages(len(data.objects)))  # read the object file
    if table.n_objects == 0:
        return []
    R = composite_records(table, mode)
    counters.add_io(pages.pages(len(R), R.n_users))  # write the record file
    return sorted(int(i) for i in _run_inner(R, inner, counters, pages, window, capacity))


def pcm_filter(table: DegreeTable, cm, p, counters: Counters | None = None, mode=STANDARD) -> list[int]:
    """Members of ``cm`` that no other member p-collectively prefers over."""
    counters = counters if counters is not None else Counters()
    k = threshold(p, table.n_users)
    cm = list(cm)
    if not cm:
        return []
    vals = table.values[cm]
    objv = table.objective[cm]
    out = []
    for pos, b in enumerate(cm):
        counters.add_checks(len(cm) * table.n_users)
        n_pref, any_strict = user_counts(vals, objv, table.values[b], table.objective[b], table.specified, mode)
        dom = (n_pref >= k) & any_strict
        dom[pos] = False
        if not dom.any():
            out.append(b)
    return out


def p_bsl(data_or_table, p, users=None, f=JACCARD, inner="bnl", counters: Counters | None = None,
          pages: PageModel = PageModel(), window=10_000, capacity=64, mode=STANDARD, multi="max"):
    """``(CM, pCM)`` by the baseline pipeline followed by pairwise p-filtering of CM."""
    counters = counters if counters is not None else Counters()
    if isinstance(data_or_table, DegreeTable):
        table = data_or_table
    else:
        table = degree_table(data_or_table, users=users, f=f, multi=multi)
        counters.add_io(pages.pages(len(data_or_table.objects)))
    threshold(p, max(1, table.n_users))
    cm = bsl(table, inner=inner, counters=counters, pages=pages, window=window, capacity=capacity, mode=mode)
    return cm, pcm_filter(table, cm, p, counters, mode)
