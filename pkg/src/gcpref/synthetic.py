"""Seeded generators: benchmark workloads and small random instances.

Benchmark workloads follow the usual protocol for this problem family:
every attribute shares one complete binary hierarchy with ``2**height``
leaves; object values are drawn uniformly from one level of it and user
values from another. Level 1 is the leaf level.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .hierarchy import Hierarchy, parse_hierarchy
from .model import Dataset, ObjectRecord, UserPrefs

__all__ = [
    "SyntheticConfig",
    "binary_hierarchy",
    "level_nodes",
    "gen_synthetic",
    "random_tree_text",
    "random_dag_text",
    "random_hierarchy",
    "random_dataset",
]


@dataclass(frozen=True)
class SyntheticConfig:
    num_objects: int = 100_000
    num_attributes: int = 4
    group_size: int = 8
    height: int = 8
    object_level: int = 1
    user_level: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_objects < 1 or self.num_attributes < 1 or self.group_size < 0:
            raise ValueError("sizes must be positive")
        if self.height < 1:
            raise ValueError("hierarchy height must be at least 1")
        if not 1 <= self.object_level < self.height + 1:
            raise ValueError(f"object level must lie in [1, {self.height}]")
        if not 1 <= self.user_level <= self.height:
            raise ValueError(f"user level must lie in [1, {self.height}]")

    def as_dict(self):
        return asdict(self)


def binary_hierarchy(height: int, attribute: str) -> Hierarchy:
    """Complete binary tree with ``2**height`` leaves.

    Node labels are ``<attribute>.<level>.<position>`` with level 1 for the
    leaves and ``height + 1`` for the root.
    """
    lines = [f"#attribute\t{attribute}"]

    def walk(level, pos, depth):
        lines.append(f"{depth}\t{attribute}.{level}.{pos}")
        if level > 1:
            walk(level - 1, 2 * pos, depth + 1)
            walk(level - 1, 2 * pos + 1, depth + 1)

    walk(height + 1, 0, 0)
    return parse_hierarchy("\n".join(lines))


def level_nodes(h: Hierarchy, level: int) -> list[int]:
    """Node ids at ``level`` (1 = leaves) of a complete hierarchy, left to right."""
    top = h.height()
    return [v for v in range(len(h)) if top - h.depth(v) == level]


def gen_synthetic(cfg: SyntheticConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    hs = [binary_hierarchy(cfg.height, f"A{k + 1}") for k in range(cfg.num_attributes)]
    # all attributes share one shape, so one level table serves every attribute
    obj_level = np.array(level_nodes(hs[0], cfg.object_level))
    usr_level = np.array(level_nodes(hs[0], cfg.user_level))
    ov = obj_level[rng.integers(0, len(obj_level), size=(cfg.num_objects, cfg.num_attributes))]
    uv = usr_level[rng.integers(0, len(usr_level), size=(cfg.group_size, cfg.num_attributes))]
    width = len(str(cfg.num_objects))
    objects = [ObjectRecord(f"o{i + 1:0{width}d}", tuple((int(v),) for v in row)) for i, row in enumerate(ov)]
    users = [UserPrefs(f"u{j + 1}", tuple((int(v),) for v in row)) for j, row in enumerate(uv)]
    return Dataset(hs, objects, users)


# --------------------------------------------------------------------------
# random small instances (tests, audits)


def random_tree_text(rng: np.random.Generator, n_leaves: int, attribute="A", max_children=4) -> str:
    """Random tree document with ``n_leaves`` leaves and no single-child node."""
    counter = [0]

    def name():
        counter[0] += 1
        return f"{attribute}{counter[0]}"

    lines = [f"#attribute\t{attribute}"]

    def build(leaves, depth):
        lines.append(f"{depth}\t{name()}")
        if leaves == 1:
            return
        k = int(rng.integers(2, min(max_children, leaves) + 1))
        cuts = np.sort(rng.choice(np.arange(1, leaves), size=k - 1, replace=False))
        sizes = np.diff(np.concatenate([[0], cuts, [leaves]]))
        for s in sizes:
            build(int(s), depth + 1)

    build(max(2, n_leaves), 0)
    return "\n".join(lines) + "\n"


def random_dag_text(rng: np.random.Generator, n_leaves: int, attribute="A", extra_edges=3) -> str:
    """Random tree plus ``#extra`` edges that keep the graph acyclic."""
    text = random_tree_text(rng, n_leaves, attribute)
    h = parse_hierarchy(text)
    extras = []
    n = len(h)
    desc = [h.reachable_leaves(v) for v in range(n)]
    depth = [h.depth(v) for v in range(n)]
    internal = [v for v in range(n) if h.children[v]]
    for _ in range(extra_edges * 8):
        if len(extras) >= extra_edges:
            break
        child = int(rng.integers(0, n))
        parent = int(internal[rng.integers(0, len(internal))])
        # parent strictly shallower keeps every edge pointing downwards: no cycles
        if depth[parent] >= depth[child] or parent in h.parents[child] or desc[child] <= desc[parent]:
            continue
        if (h.labels[child], h.labels[parent]) in extras:
            continue
        extras.append((h.labels[child], h.labels[parent]))
    return text + "".join(f"#extra\t{c}\t{p}\n" for c, p in extras)


def random_hierarchy(rng, n_leaves, attribute="A", dag=False):
    text = random_dag_text(rng, n_leaves, attribute) if dag else random_tree_text(rng, n_leaves, attribute)
    return parse_hierarchy(text)


def random_dataset(seed: int, n_objects=30, d=3, n_users=3, max_leaves=16, dag=False, multi=False,
                   indifference=0.2, n_objective=0, value_levels="any") -> Dataset:
    """Small random instance for oracle comparisons.

    Values are drawn from all nodes (``value_levels="any"``) or from the
    leaves only. ``multi`` lets objects and users carry up to three values;
    ``dag`` adds extra parent edges; users are indifferent to an attribute
    with probability ``indifference`` (at least one attribute stays set).
    """
    rng = np.random.default_rng(seed)
    hs = []
    for k in range(d):
        leaves = int(rng.integers(2, max_leaves + 1))
        hs.append(random_hierarchy(rng, leaves, f"A{k + 1}", dag=dag))

    def pick(h):
        pool = h.leaves() if value_levels == "leaves" else list(range(len(h)))
        count = int(rng.integers(1, 4)) if multi else 1
        return tuple(sorted({int(pool[i]) for i in rng.integers(0, len(pool), size=count)}))

    objects = []
    for i in range(n_objects):
        vals = tuple(pick(h) for h in hs)
        objv = tuple(float(x) for x in rng.integers(0, 4, size=n_objective))
        objects.append(ObjectRecord(f"o{i + 1}", vals, objv))
    users = []
    for j in range(n_users):
        vals = [None if rng.random() < indifference else pick(h) for h in hs]
        if all(v is None for v in vals):
            k = int(rng.integers(0, d))
            vals[k] = pick(hs[k])
        users.append(UserPrefs(f"u{j + 1}", tuple(vals)))
    return Dataset(hs, objects, users, [f"q{i + 1}" for i in range(n_objective)])


# --------------------------------------------------------------------------
# miniature preference fixture


def mini_fixture(base: Dataset, n_objects=40, n_users=12, n_reviewers=60, top=5, seed=7):
    """Stand-in catalog, group and popularity list over ``base``'s hierarchies.

    Objects and users draw values at random (users leave attributes
    unspecified with probability 0.4; a fifth of the objects get a second
    value on the first attribute). Each of ``n_reviewers`` random people,
    the first ``n_users`` of whom form the group, shortlists the ``top``
    objects with the best mean matching degree; popularity is the number of
    shortlists an object appears on. Returns ``(dataset, ground_truth_ids)``.
    """
    from .model import degree_table

    rng = np.random.default_rng(seed)
    hs = base.hierarchies

    def pick(h, non_root=True):
        pool = [v for v in range(len(h)) if not (non_root and v == h.root)]
        return int(pool[rng.integers(len(pool))])

    objects = []
    for i in range(n_objects):
        vals = [tuple(sorted({pick(h)})) for h in hs]
        if rng.random() < 0.2:
            vals[0] = tuple(sorted(set(vals[0]) | {pick(hs[0])}))
        rating = float(rng.integers(1, 6))
        objects.append(ObjectRecord(f"r{i + 1:02d}", tuple(vals), (rating,)))
    people = []
    for j in range(n_reviewers):
        vals = [None if rng.random() < 0.4 else (pick(h),) for h in hs]
        if all(v is None for v in vals):
            vals[0] = (pick(hs[0]),)
        people.append(UserPrefs(f"p{j + 1:02d}", tuple(vals)))
    data = Dataset(hs, objects, people, ["rating"])
    table = degree_table(data)
    spec = table.specified.astype(float)[None]
    scalars = (table.values * spec).sum(axis=2) / np.maximum(spec.sum(axis=2), 1)
    votes = np.zeros(n_objects)
    rating = np.array([o.objective[0] for o in objects])
    for j in range(n_reviewers):
        order = np.lexsort((np.arange(n_objects), -rating, -scalars[:, j]))
        votes[order[:top]] += 1
    ranked = np.lexsort((np.arange(n_objects), -rating, -votes))
    group = [UserPrefs(f"u{j + 1}", people[j].values) for j in range(n_users)]
    return data.with_users(group), [objects[i].object_id for i in ranked]
