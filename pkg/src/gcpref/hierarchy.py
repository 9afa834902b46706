"""Attribute hierarchies and their interval labelings.

A hierarchy is a rooted tree (or DAG) of categories. Every node stands for
the set of leaves reachable from it. The labeling assigns each node a sorted
list of disjoint half-open integer intervals over ``[0, n_leaves)`` such that
the total interval length equals the node's leaf count, which turns set
intersection/union sizes into interval arithmetic.

Document format (UTF-8, one node per line)::

    #attribute<TAB>Attire
    0<TAB>Attire
    1<TAB>Formal
    1<TAB>Casual
    2<TAB>Smart casual
    2<TAB>Business casual
    1<TAB>Street wear
    #extra<TAB>Sport casual<TAB>Casual

Lines starting with ``#`` are comments, except the ``#attribute``,
``#extra``, ``#alias`` and ``#order`` directives.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "HierarchyError",
    "CycleError",
    "DuplicateLabelError",
    "MultipleRootsError",
    "EmptyHierarchyError",
    "Hierarchy",
    "IntervalLabeling",
    "parse_hierarchy",
    "load_hierarchy",
    "format_hierarchy",
    "label_tree",
    "label_dag",
    "label",
    "merge_intervals",
    "interval_length",
    "intersection_size",
    "set_cardinalities",
]

FORMAT_LINE = "#format\tgcp-hierarchy\t1"


class HierarchyError(ValueError):
    """Malformed hierarchy document."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CycleError(HierarchyError):
    pass


class DuplicateLabelError(HierarchyError):
    pass


class MultipleRootsError(HierarchyError):
    pass


class EmptyHierarchyError(HierarchyError):
    pass


@dataclass(frozen=True)
class Hierarchy:
    """Immutable category hierarchy.

    ``parents[v]`` lists the primary (tree) parent first; any further parents
    come from ``#extra`` edges. ``children[v]`` is in the recorded child
    order, tree children before extra children.
    """

    attribute: str
    labels: tuple[str, ...]
    parents: tuple[tuple[int, ...], ...]
    children: tuple[tuple[int, ...], ...]
    root: int
    aliases: tuple[tuple[str, str], ...] = ()
    lexicographic: bool = False
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        index = {lab: i for i, lab in enumerate(self.labels)}
        for alias, target in self.aliases:
            index.setdefault(alias, index[target])
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.labels)

    @property
    def is_dag(self) -> bool:
        return any(len(p) > 1 for p in self.parents)

    def node(self, label: str) -> int:
        """Node id of ``label`` (aliases of collapsed nodes resolve too)."""
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"{self.attribute}: unknown value {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def leaves(self) -> list[int]:
        return [v for v in range(len(self.labels)) if not self.children[v]]

    def depth(self, v: int) -> int:
        d = 0
        while self.parents[v]:
            v = self.parents[v][0]
            d += 1
        return d

    def height(self) -> int:
        """Number of levels on the longest root-to-leaf path."""
        memo = {}

        def h(v):
            if v not in memo:
                memo[v] = 1 + max((h(c) for c in self.children[v]), default=0)
            return memo[v]

        return h(self.root)

    def reachable_leaves(self, v: int) -> frozenset:
        """Leaves reachable from ``v`` by graph search; used as an oracle."""
        seen, stack, out = {v}, [v], set()
        while stack:
            x = stack.pop()
            if not self.children[x]:
                out.add(x)
            for c in self.children[x]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(out)


def _graph_has_cycle(children, n):
    color = [0] * n
    for start in range(n):
        if color[start]:
            continue
        stack = [(start, iter(children[start]))]
        color[start] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                stack.pop()
            elif color[nxt] == 1:
                return True
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(children[nxt])))
    return False


def parse_hierarchy(text: str, attribute: str | None = None, lexicographic: bool = False) -> Hierarchy:
    """Parse a hierarchy document.

    Single-child chains are collapsed: the child survives under its own label
    and the parent's label becomes an alias of it. A node whose only child
    also has other parents (DAG sharing) is kept as is.

    Raises:
        EmptyHierarchyError, MultipleRootsError, DuplicateLabelError,
        CycleError, HierarchyError: on malformed input; messages carry the
        offending line number where there is one.
    """
    labels: list[str] = []
    parents: list[list[int]] = []
    index: dict[str, int] = {}
    extras: list[tuple[str, str, int]] = []
    aliases: list[tuple[str, str]] = []
    path: list[int] = []
    root = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line.split("\t")
            if parts[0] == "#extra":
                if len(parts) != 3:
                    raise HierarchyError("#extra needs child and parent labels", lineno)
                extras.append((parts[1], parts[2], lineno))
            elif parts[0] == "#attribute" and len(parts) >= 2:
                if attribute is None:
                    attribute = parts[1]
            elif parts[0] == "#alias" and len(parts) == 3:
                aliases.append((parts[1], parts[2]))
            elif parts[0] == "#order" and len(parts) == 2:
                lexicographic = lexicographic or parts[1] == "lexicographic"
            continue
        depth_s, sep, lab = line.partition("\t")
        if not sep:
            raise HierarchyError("expected 'depth<TAB>label'", lineno)
        try:
            depth = int(depth_s)
        except ValueError:
            raise HierarchyError(f"bad depth {depth_s!r}", lineno) from None
        lab = lab.strip()
        if not lab:
            raise HierarchyError("empty label", lineno)
        if depth == 0:
            if root is not None:
                raise MultipleRootsError(f"second root {lab!r}", lineno)
        elif depth < 0 or depth > len(path):
            raise HierarchyError(f"depth {depth} does not follow the previous line", lineno)
        del path[depth:]
        if lab in index:
            if index[lab] in path:
                raise CycleError(f"{lab!r} is listed under its own descendant", lineno)
            raise DuplicateLabelError(f"duplicate label {lab!r}", lineno)
        v = len(labels)
        index[lab] = v
        labels.append(lab)
        parents.append([path[-1]] if path else [])
        if depth == 0:
            root = v
        path.append(v)

    if root is None:
        raise EmptyHierarchyError("no nodes in hierarchy document")

    for child, parent, lineno in extras:
        if child not in index or parent not in index:
            raise HierarchyError("#extra references an unknown label", lineno)
        c, p = index[child], index[parent]
        if c == p:
            raise CycleError(f"{child!r} is its own parent", lineno)
        if p not in parents[c]:
            parents[c].append(p)

    n = len(labels)
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for p in parents[v]:
            children[p].append(v)
    # tree children first, then extra children, each in document order
    for p in range(n):
        children[p].sort(key=lambda c: (parents[c][0] != p, c))
        if lexicographic:
            tree = [c for c in children[p] if parents[c][0] == p]
            extra = [c for c in children[p] if parents[c][0] != p]
            children[p] = sorted(tree, key=lambda c: labels[c]) + sorted(extra, key=lambda c: labels[c])
    if _graph_has_cycle(children, n):
        raise CycleError("#extra edges introduce a cycle")

    labels, parents, children, root, collapsed = _collapse_chains(labels, parents, children, root)
    aliases = collapsed + [a for a in aliases if a[0] not in {x for x, _ in collapsed}]

    return Hierarchy(
        attribute=attribute or labels[root],
        labels=tuple(labels),
        parents=tuple(tuple(p) for p in parents),
        children=tuple(tuple(c) for c in children),
        root=root,
        aliases=tuple(aliases),
        lexicographic=lexicographic,
    )


def _collapse_chains(labels, parents, children, root):
    n = len(labels)
    merged_into = list(range(n))
    aliases = []
    alive = [True] * n
    for v in _topological(children, root, n):
        if not alive[v]:
            continue
        while len(children[v]) == 1 and parents[children[v][0]] == [v]:
            c = children[v][0]
            # c replaces v in v's parents' child lists
            for p in parents[v]:
                children[p] = [c if x == v else x for x in children[p]]
            parents[c] = list(parents[v])
            aliases.append((labels[v], labels[c]))
            alive[v] = False
            merged_into[v] = c
            if v == root:
                root = c
            v = c
    keep = [v for v in range(n) if alive[v]]
    remap = {v: i for i, v in enumerate(keep)}
    new_labels = [labels[v] for v in keep]
    new_parents = [[remap[p] for p in parents[v]] for v in keep]
    new_children = [[remap[c] for c in children[v]] for v in keep]
    # alias chains resolve to the final surviving label
    resolved = []
    for alias, target in aliases:
        t = labels.index(target)
        while not alive[t]:
            t = merged_into[t]
        resolved.append((alias, labels[t]))
    return new_labels, new_parents, new_children, remap[root], resolved


def _topological(children, root, n):
    order, seen = [], set()
    indeg = [0] * n
    for v in range(n):
        for c in children[v]:
            indeg[c] += 1
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return order


def load_hierarchy(path, attribute=None, lexicographic=False) -> Hierarchy:
    path = Path(path)
    try:
        return parse_hierarchy(path.read_text(encoding="utf-8"), attribute, lexicographic)
    except HierarchyError as exc:
        raise HierarchyError(f"{path}: {exc}") from exc


def format_hierarchy(h: Hierarchy) -> str:
    """Serialize ``h``; ``parse_hierarchy(format_hierarchy(h))`` rebuilds it."""
    lines = [FORMAT_LINE, f"#attribute\t{h.attribute}"]
    if h.lexicographic:
        lines.append("#order\tlexicographic")

    def walk(v, depth):
        lines.append(f"{depth}\t{h.labels[v]}")
        for c in h.children[v]:
            if h.parents[c][0] == v:
                walk(c, depth + 1)

    walk(h.root, 0)
    for v in range(len(h)):
        for p in h.parents[v][1:]:
            lines.append(f"#extra\t{h.labels[v]}\t{h.labels[p]}")
    for alias, target in h.aliases:
        lines.append(f"#alias\t{alias}\t{target}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# interval arithmetic


def interval_length(intervals) -> int:
    return sum(hi - lo for lo, hi in intervals)


def merge_intervals(intervals) -> tuple[tuple[int, int], ...]:
    """Sort and merge overlapping or adjacent half-open intervals."""
    out: list[list[int]] = []
    for lo, hi in sorted(intervals):
        if lo >= hi:
            continue
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


def intersection_size(xs, ys) -> int:
    """Sum over interval pairs of the overlap length."""
    total = 0
    for xlo, xhi in xs:
        for ylo, yhi in ys:
            w = min(xhi, yhi) - max(xlo, ylo)
            if w > 0:
                total += w
    return total


def set_cardinalities(x_intervals, y_intervals) -> tuple[int, int, int]:
    """Return ``(|x|, |x ∩ y|, |x ∪ y|)`` for two labeled values.

    Both arguments are interval sets from the same labeling; within one set
    the intervals are disjoint, so plain sums are exact.
    """
    nx = interval_length(x_intervals)
    ny = interval_length(y_intervals)
    inter = intersection_size(x_intervals, y_intervals)
    return nx, inter, nx + ny - inter


@dataclass(frozen=True)
class IntervalLabeling:
    """Node -> interval-set map for one hierarchy.

    ``intervals[v]`` is sorted, pairwise disjoint and has adjacent pieces
    merged. ``leaf_order`` lists the leaves left to right.
    """

    hierarchy: Hierarchy
    intervals: tuple[tuple[tuple[int, int], ...], ...]
    leaf_order: tuple[int, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_order)

    def of(self, v: int):
        return self.intervals[v]

    def of_label(self, label: str):
        return self.intervals[self.hierarchy.node(label)]

    def leaf_count(self, v: int) -> int:
        return interval_length(self.intervals[v])

    @property
    def single_interval(self) -> bool:
        return all(len(iv) == 1 for iv in self.intervals)

    def bounds(self):
        """Per node ``(lo, hi)`` of the covering range."""
        return [(iv[0][0], iv[-1][1]) for iv in self.intervals]


def _spanning_tree(h: Hierarchy):
    """Depth-first spanning tree; the first edge that reaches a node wins."""
    n = len(h)
    tree_children: list[list[int]] = [[] for _ in range(n)]
    seen = [False] * n
    seen[h.root] = True
    stack = [(h.root, iter(h.children[h.root]))]
    while stack:
        v, it = stack[-1]
        c = next(it, None)
        if c is None:
            stack.pop()
            continue
        if not seen[c]:
            seen[c] = True
            tree_children[v].append(c)
            stack.append((c, iter(h.children[c])))
    return tree_children


def _label_spanning(h: Hierarchy, tree_children):
    n = len(h)
    intervals: list[tuple] = [()] * n
    leaf_order: list[int] = []

    def visit(v):
        if not h.children[v]:
            i = len(leaf_order)
            leaf_order.append(v)
            intervals[v] = ((i, i + 1),)
            return
        for c in tree_children[v]:
            visit(c)
        pieces = [iv for c in tree_children[v] for iv in intervals[c]]
        if pieces:
            intervals[v] = ((min(p[0] for p in pieces), max(p[1] for p in pieces)),)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 100))
    try:
        visit(h.root)
    finally:
        sys.setrecursionlimit(limit)
    return intervals, leaf_order


def label_tree(h: Hierarchy) -> IntervalLabeling:
    """Leaf ``i`` (in child order) gets ``[i, i+1)``; inner nodes the covering interval."""
    if h.is_dag:
        raise ValueError(f"{h.attribute}: hierarchy has shared nodes, use label_dag")
    tree_children = [list(c) for c in h.children]
    intervals, leaf_order = _label_spanning(h, tree_children)
    return IntervalLabeling(h, tuple(intervals), tuple(leaf_order))


def label_dag(h: Hierarchy) -> IntervalLabeling:
    """Label a DAG through a DFS spanning tree plus interval propagation.

    The spanning tree is labeled like a tree. Intervals of a child reached
    through a non-tree edge are pushed to that parent and, transitively, to
    every ancestor, merging adjacent pieces on the way.
    """
    tree_children = _spanning_tree(h)
    intervals, leaf_order = _label_spanning(h, tree_children)
    if h.is_dag:
        # children before parents, so each node folds in final child sets
        merged = list(intervals)
        for v in reversed(_topological(h.children, h.root, len(h))):
            if h.children[v]:
                pieces = list(merged[v])
                for c in h.children[v]:
                    pieces.extend(merged[c])
                merged[v] = merge_intervals(pieces)
        intervals = merged
    return IntervalLabeling(h, tuple(tuple(iv) for iv in intervals), tuple(leaf_order))


def label(h: Hierarchy) -> IntervalLabeling:
    return label_dag(h) if h.is_dag else label_tree(h)
