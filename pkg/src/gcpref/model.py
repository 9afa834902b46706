"""Objects, user preferences, and matching degrees.

Matching degrees are functions of leaf-set cardinalities. All cardinalities
come from interval labelings, so a degree is a ratio of small integers; the
float64 tables hold the correctly rounded value of that ratio and
``exact=True`` paths return :class:`fractions.Fraction`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .hierarchy import (
    Hierarchy,
    IntervalLabeling,
    format_hierarchy,
    label,
    load_hierarchy,
    set_cardinalities,
)

__all__ = [
    "Similarity",
    "JACCARD",
    "OVERLAP",
    "DICE",
    "get_similarity",
    "ObjectRecord",
    "UserPrefs",
    "MatchingVector",
    "Dataset",
    "DegreeTable",
    "DataError",
    "matching_degree",
    "matching_vector",
    "degree_table",
    "load_dataset",
    "save_dataset",
    "read_objects",
    "read_users",
    "format_objects",
    "format_users",
    "INDIFFERENT",
]

INDIFFERENT = None
MULTI_SEP = "|"
INDIFFERENT_MARK = "-"
OBJECTIVE_PREFIX = "obj:"
OBJECTS_VERSION = "# gcp-objects v1"
USERS_VERSION = "# gcp-users v1"


class DataError(ValueError):
    """Malformed object or user file; the message names file and line."""


# --------------------------------------------------------------------------
# similarity functions


class Similarity:
    """Set similarity over ``(|x|, |x∩y|, |x∪y|, |y|)``.

    Subclasses supply the integer-exact value, a vectorized float version,
    and an upper bound usable when ``x`` is only known to lie inside a range.
    """

    name = "custom"

    def exact(self, nx, inter, union, ny) -> Fraction:
        raise NotImplementedError

    def __call__(self, nx, inter, union, ny) -> float:
        return float(self.exact(nx, inter, union, ny))

    def vectorized(self, nx, inter, union, ny):
        fn = np.vectorize(lambda a, b, c, d: self(int(a), int(b), int(c), int(d)), otypes=[float])
        return fn(nx, inter, union, ny)

    def upper_bound(self, inter_ub, ny, range_size):
        """Largest value any ``x`` inside the range can reach.

        ``inter_ub`` is ``|y ∩ R|`` (an upper bound on ``|x ∩ y|``), ``ny`` the
        user-side cardinality and ``range_size`` the range width. The generic
        fallback is the trivial bound 1.
        """
        return np.ones_like(np.asarray(inter_ub, dtype=float))

    def __repr__(self):
        return f"<Similarity {self.name}>"


class _Jaccard(Similarity):
    name = "jaccard"

    def exact(self, nx, inter, union, ny):
        return Fraction(inter, union)

    def vectorized(self, nx, inter, union, ny):
        return inter / union

    def upper_bound(self, inter_ub, ny, range_size):
        # |x∩y| <= |y∩R|, |x∪y| >= |y| once they overlap
        return np.minimum(np.asarray(inter_ub, dtype=float) / ny, 1.0)


class _Overlap(Similarity):
    name = "overlap"

    def exact(self, nx, inter, union, ny):
        return Fraction(inter, min(nx, ny))

    def vectorized(self, nx, inter, union, ny):
        return inter / np.minimum(nx, ny)

    def upper_bound(self, inter_ub, ny, range_size):
        # min(|x|, |y|) >= 1
        return np.minimum(np.asarray(inter_ub, dtype=float), 1.0)


class _Dice(Similarity):
    name = "dice"

    def exact(self, nx, inter, union, ny):
        return Fraction(2 * inter, nx + ny)

    def vectorized(self, nx, inter, union, ny):
        return 2.0 * inter / (nx + ny)

    def upper_bound(self, inter_ub, ny, range_size):
        # |x| >= |x∩y|, and 2a / (a + |y|) grows with a
        a = np.asarray(inter_ub, dtype=float)
        return np.minimum(2.0 * a / np.maximum(a + ny, 1.0), 1.0)


class CustomSimilarity(Similarity):
    """Wrap ``fn(nx, inter, union, ny) -> value in [0, 1]``.

    Pass ``bound`` when a tighter-than-1 range bound is known; it receives
    the same arguments as :meth:`Similarity.upper_bound`.
    """

    def __init__(self, fn: Callable, name="custom", bound: Callable | None = None):
        self.fn = fn
        self.name = name
        self._bound = bound

    def exact(self, nx, inter, union, ny):
        v = self.fn(nx, inter, union, ny)
        return v if isinstance(v, Fraction) else Fraction(v)

    def __call__(self, nx, inter, union, ny):
        return float(self.fn(nx, inter, union, ny))

    def upper_bound(self, inter_ub, ny, range_size):
        if self._bound is None:
            return super().upper_bound(inter_ub, ny, range_size)
        return np.minimum(self._bound(inter_ub, ny, range_size), 1.0)


JACCARD = _Jaccard()
OVERLAP = _Overlap()
DICE = _Dice()
_BY_NAME = {s.name: s for s in (JACCARD, OVERLAP, DICE)}


def get_similarity(f) -> Similarity:
    if isinstance(f, Similarity):
        return f
    try:
        return _BY_NAME[str(f).lower()]
    except KeyError:
        raise ValueError(f"unknown similarity {f!r}; expected one of {sorted(_BY_NAME)}") from None


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class ObjectRecord:
    """A catalog entry: per attribute a non-empty tuple of node ids."""

    object_id: str
    values: tuple[tuple[int, ...], ...]
    objective: tuple[float, ...] = ()


@dataclass(frozen=True)
class UserPrefs:
    """Per attribute a tuple of node ids, or ``None`` when indifferent."""

    user_id: str
    values: tuple[tuple[int, ...] | None, ...]

    def specified(self, k: int) -> bool:
        return self.values[k] is not None


@dataclass(frozen=True)
class MatchingVector:
    degrees: tuple
    specified: tuple[bool, ...] = ()

    @property
    def norm(self):
        return sum(self.degrees)

    def __len__(self):
        return len(self.degrees)

    def __getitem__(self, k):
        return self.degrees[k]


@dataclass
class Dataset:
    """Hierarchies, their labelings, objects and users.

    ``objective`` names numeric attributes whose larger values every user
    prefers; their values live in ``ObjectRecord.objective``.
    """

    hierarchies: list[Hierarchy]
    objects: list[ObjectRecord]
    users: list[UserPrefs] = field(default_factory=list)
    objective: list[str] = field(default_factory=list)
    labelings: list[IntervalLabeling] = None

    def __post_init__(self):
        if self.labelings is None:
            self.labelings = [label(h) for h in self.hierarchies]
        for o in self.objects:
            self._check_object(o)
        for u in self.users:
            self._check_user(u)

    @property
    def d(self) -> int:
        return len(self.hierarchies)

    @property
    def attributes(self) -> list[str]:
        return [h.attribute for h in self.hierarchies]

    def _check_object(self, o):
        if len(o.values) != self.d:
            raise ValueError(f"object {o.object_id}: expected {self.d} attribute values")
        for k, vals in enumerate(o.values):
            if not vals:
                raise ValueError(f"object {o.object_id}: no value for {self.hierarchies[k].attribute}")
            for v in vals:
                if not 0 <= v < len(self.hierarchies[k]):
                    raise ValueError(f"object {o.object_id}: bad node id {v}")
        if len(o.objective) != len(self.objective):
            raise ValueError(f"object {o.object_id}: expected {len(self.objective)} objective values")

    def _check_user(self, u):
        if len(u.values) != self.d:
            raise ValueError(f"user {u.user_id}: expected {self.d} attribute entries")
        if all(v is None for v in u.values):
            raise ValueError(f"user {u.user_id}: at least one attribute must be specified")
        for k, vals in enumerate(u.values):
            if vals is not None:
                if not vals:
                    raise ValueError(f"user {u.user_id}: empty value set")
                for v in vals:
                    if not 0 <= v < len(self.hierarchies[k]):
                        raise ValueError(f"user {u.user_id}: bad node id {v}")

    def attribute_index(self, name: str) -> int:
        try:
            return self.attributes.index(name)
        except ValueError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def make_object(self, object_id, values: dict | Sequence, objective=()) -> ObjectRecord:
        """Build an object from labels (``str`` or list of ``str`` per attribute)."""
        vals = self._resolve(values)
        if any(v is None for v in vals):
            raise ValueError(f"object {object_id}: objects must specify every attribute")
        return ObjectRecord(object_id, tuple(vals), tuple(float(x) for x in objective))

    def make_user(self, user_id, values: dict | Sequence) -> UserPrefs:
        return UserPrefs(user_id, tuple(self._resolve(values)))

    def _resolve(self, values):
        if isinstance(values, dict):
            values = [values.get(a) for a in self.attributes]
        out = []
        for h, v in zip(self.hierarchies, values):
            if v is None:
                out.append(None)
            else:
                labs = [v] if isinstance(v, str) else list(v)
                out.append(tuple(h.node(x) for x in labs))
        return out

    def with_users(self, users) -> "Dataset":
        return Dataset(self.hierarchies, self.objects, list(users), self.objective, self.labelings)

    def with_objects(self, objects) -> "Dataset":
        return Dataset(self.hierarchies, list(objects), self.users, self.objective, self.labelings)

    def intervals(self, k: int, nodes) -> list:
        """All intervals of a value set on attribute ``k``."""
        lab = self.labelings[k]
        return [iv for v in nodes for iv in lab.intervals[v]]


# --------------------------------------------------------------------------
# matching degrees


def _aggregate(values, mode):
    if mode == "max":
        return max(values)
    if mode == "min":
        return min(values)
    if mode == "avg":
        return sum(values) / len(values)
    raise ValueError(f"unknown multi-value mode {mode!r}")


def matching_degree(data: Dataset, o: ObjectRecord, u: UserPrefs, k: int | str, f=JACCARD,
                    exact=False, multi="max"):
    """Degree of ``o`` to ``u`` on attribute ``k``.

    Indifference yields 1. With multiple values on either side the pairwise
    degrees are aggregated by ``multi`` (``max``, or ``min``/``avg``).
    """
    if isinstance(k, str):
        k = data.attribute_index(k)
    if not 0 <= k < data.d:
        raise KeyError(f"unknown attribute index {k}")
    f = get_similarity(f)
    if u.values[k] is None:
        return Fraction(1) if exact else 1.0
    lab = data.labelings[k]
    degs = []
    for x in o.values[k]:
        for y in u.values[k]:
            nx, inter, union = set_cardinalities(lab.intervals[x], lab.intervals[y])
            ny = union - nx + inter
            degs.append(f.exact(nx, inter, union, ny) if exact else f(nx, inter, union, ny))
    return _aggregate(degs, multi)


def matching_vector(data: Dataset, o: ObjectRecord, u: UserPrefs, f=JACCARD, exact=False,
                    multi="max") -> MatchingVector:
    degs = tuple(matching_degree(data, o, u, k, f, exact, multi) for k in range(data.d))
    return MatchingVector(degs, tuple(v is not None for v in u.values))


def node_user_degrees(data: Dataset, k: int, u: UserPrefs, f=JACCARD):
    """Degree of every node of hierarchy ``k`` against each of ``u``'s values.

    Returns an array of shape ``(n_user_values, n_nodes)``.
    """
    f = get_similarity(f)
    lab = data.labelings[k]
    n = len(lab.intervals)
    vals = u.values[k]
    if lab.single_interval:
        bounds = np.asarray(lab.bounds(), dtype=np.int64)
        lo, hi = bounds[:, 0], bounds[:, 1]
        nx = hi - lo
        out = np.empty((len(vals), n))
        for i, y in enumerate(vals):
            ylo, yhi = bounds[y]
            inter = np.clip(np.minimum(hi, yhi) - np.maximum(lo, ylo), 0, None)
            ny = yhi - ylo
            union = nx + ny - inter
            out[i] = f.vectorized(nx, inter, union, ny)
        return out
    out = np.empty((len(vals), n))
    for i, y in enumerate(vals):
        for x in range(n):
            nx, inter, union = set_cardinalities(lab.intervals[x], lab.intervals[y])
            out[i, x] = f(nx, inter, union, union - nx + inter)
    return out


def _padded_values(objects, k):
    width = max(len(o.values[k]) for o in objects)
    ids = np.full((len(objects), width), -1, dtype=np.int64)
    for i, o in enumerate(objects):
        ids[i, : len(o.values[k])] = o.values[k]
    return ids


@dataclass
class DegreeTable:
    """``values[i, j, k]``: degree of object ``i`` to user ``j`` on attribute ``k``.

    ``specified[j, k]`` marks attributes user ``j`` expressed a preference on
    (indifferent ones hold 1). ``objective[i]`` carries the objective
    attribute values of object ``i``.
    """

    values: np.ndarray
    specified: np.ndarray
    objective: np.ndarray
    object_ids: list[str]
    user_ids: list[str]

    @property
    def n_objects(self):
        return self.values.shape[0]

    @property
    def n_users(self):
        return self.values.shape[1]

    @property
    def d(self):
        return self.values.shape[2]

    def vector(self, i, j) -> MatchingVector:
        return MatchingVector(tuple(float(x) for x in self.values[i, j]), tuple(bool(s) for s in self.specified[j]))

    def norms(self) -> np.ndarray:
        return self.values.sum(axis=2)

    def composite(self) -> np.ndarray:
        """``(n_objects, n_users * d)`` flattening used by the skyline code."""
        return self.values.reshape(self.n_objects, -1)

    def subset_objects(self, idx) -> "DegreeTable":
        idx = list(idx)
        return DegreeTable(self.values[idx], self.specified, self.objective[idx],
                           [self.object_ids[i] for i in idx], list(self.user_ids))

    def subset_users(self, idx) -> "DegreeTable":
        idx = list(idx)
        return DegreeTable(self.values[:, idx], self.specified[idx], self.objective,
                           list(self.object_ids), [self.user_ids[j] for j in idx])

    @classmethod
    def from_array(cls, values, specified=None, objective=None, object_ids=None, user_ids=None):
        """Build a table from injected degrees (axiom tests, fixtures).

        Cells of attributes a user is indifferent to are set to 1.
        """
        values = np.array(values, dtype=float)
        if values.ndim != 3:
            raise ValueError("values must have shape (objects, users, attributes)")
        n, m, d = values.shape
        specified = np.ones((m, d), dtype=bool) if specified is None else np.asarray(specified, dtype=bool)
        if specified.shape != (m, d):
            raise ValueError(f"specified must have shape {(m, d)}, got {specified.shape}")
        values[:, ~specified] = 1.0
        if objective is None:
            objective = np.zeros((n, 0))
        return cls(
            values,
            specified,
            np.asarray(objective, dtype=float).reshape(n, -1),
            list(object_ids) if object_ids is not None else [f"o{i + 1}" for i in range(n)],
            list(user_ids) if user_ids is not None else [f"u{j + 1}" for j in range(m)],
        )


def object_degrees(data: Dataset, objects, users, f=JACCARD, multi="max", lookups=None):
    """Vectorized degrees for a batch of objects: ``(len(objects), len(users), d)``."""
    n, m, d = len(objects), len(users), data.d
    out = np.ones((n, m, d))
    if n == 0 or m == 0:
        return out
    for k in range(d):
        ids = _padded_values(objects, k)
        mask = ids >= 0
        safe = np.where(mask, ids, 0)
        for j, u in enumerate(users):
            if u.values[k] is None:
                continue
            table = lookups[k][j] if lookups is not None else node_user_degrees(data, k, u, f)
            d_all = table[:, safe]  # (n_uvals, n, width)
            if multi == "max":
                d_all = np.where(mask[None], d_all, -np.inf)
                out[:, j, k] = d_all.max(axis=(0, 2))
            elif multi == "min":
                d_all = np.where(mask[None], d_all, np.inf)
                out[:, j, k] = d_all.min(axis=(0, 2))
            elif multi == "avg":
                cnt = mask.sum(axis=1) * table.shape[0]
                out[:, j, k] = np.where(mask[None], d_all, 0.0).sum(axis=(0, 2)) / cnt
            else:
                raise ValueError(f"unknown multi-value mode {multi!r}")
    return out


def degree_lookups(data: Dataset, users, f=JACCARD):
    """Per attribute, per user: node-vs-user-value degree tables (``None`` if indifferent)."""
    return [
        [None if u.values[k] is None else node_user_degrees(data, k, u, f) for u in users]
        for k in range(data.d)
    ]


def degree_table(data: Dataset, objects=None, users=None, f=JACCARD, multi="max") -> DegreeTable:
    """Matching degrees of every object to every user."""
    objects = data.objects if objects is None else objects
    users = data.users if users is None else users
    f = get_similarity(f)
    values = object_degrees(data, objects, users, f, multi)
    specified = np.array([[v is not None for v in u.values] for u in users], dtype=bool).reshape(len(users), data.d)
    objective = np.array([o.objective for o in objects], dtype=float).reshape(len(objects), len(data.objective))
    return DegreeTable(values, specified, objective, [o.object_id for o in objects], [u.user_id for u in users])


# --------------------------------------------------------------------------
# file formats


def _split_cell(cell):
    return [x.strip() for x in cell.split(MULTI_SEP) if x.strip()]


def _data_rows(text, source):
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DataError(f"{source}: no header line")
    reader = csv.reader([ln for _, ln in lines], skipinitialspace=True)
    rows = list(reader)
    return [(lines[i][0], row) for i, row in enumerate(rows)]


def read_objects(text, hierarchies, source="<objects>"):
    """Parse an objects CSV; returns ``(objects, objective_names)``."""
    rows = _data_rows(text, source)
    (hline, header), body = rows[0], rows[1:]
    header = [h.strip() for h in header]
    subj = [h for h in header[1:] if not h.startswith(OBJECTIVE_PREFIX)]
    objn = [h[len(OBJECTIVE_PREFIX):] for h in header[1:] if h.startswith(OBJECTIVE_PREFIX)]
    by_attr = {h.attribute: h for h in hierarchies}
    if subj != [h.attribute for h in hierarchies]:
        missing = [a for a in subj if a not in by_attr]
        if missing:
            raise DataError(f"{source}:{hline}: no hierarchy for attribute(s) {missing}")
        raise DataError(f"{source}:{hline}: attribute columns must match hierarchy order {[h.attribute for h in hierarchies]}")
    objects = []
    seen = set()
    for lineno, row in body:
        if len(row) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        oid = row[0].strip()
        if oid in seen:
            raise DataError(f"{source}:{lineno}: duplicate object id {oid!r}")
        seen.add(oid)
        vals, objv = [], []
        for col, cell in zip(header[1:], row[1:]):
            if col.startswith(OBJECTIVE_PREFIX):
                try:
                    objv.append(float(cell))
                except ValueError:
                    raise DataError(f"{source}:{lineno}: objective value {cell!r} is not a number") from None
                continue
            labs = _split_cell(cell)
            if not labs or labs == [INDIFFERENT_MARK]:
                raise DataError(f"{source}:{lineno}: object {oid} has no value for {col}")
            try:
                vals.append(tuple(by_attr[col].node(x) for x in labs))
            except KeyError as exc:
                raise DataError(f"{source}:{lineno}: {exc.args[0]}") from None
        objects.append(ObjectRecord(oid, tuple(vals), tuple(objv)))
    return objects, objn


def read_users(text, hierarchies, source="<users>"):
    rows = _data_rows(text, source)
    (hline, header), body = rows[0], rows[1:]
    header = [h.strip() for h in header]
    if header[1:] != [h.attribute for h in hierarchies]:
        raise DataError(f"{source}:{hline}: attribute columns must be {[h.attribute for h in hierarchies]}")
    users = []
    for lineno, row in body:
        if len(row) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for h, cell in zip(hierarchies, row[1:]):
            labs = _split_cell(cell)
            if not labs or labs == [INDIFFERENT_MARK]:
                vals.append(None)
                continue
            try:
                vals.append(tuple(h.node(x) for x in labs))
            except KeyError as exc:
                raise DataError(f"{source}:{lineno}: {exc.args[0]}") from None
        if all(v is None for v in vals):
            raise DataError(f"{source}:{lineno}: user {row[0].strip()} specifies no attribute")
        users.append(UserPrefs(row[0].strip(), tuple(vals)))
    return users


def _fmt_num(x):
    return repr(float(x)) if not float(x).is_integer() else str(int(x)) if abs(x) < 1e15 else repr(float(x))


def format_objects(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write(OBJECTS_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["object_id"] + data.attributes + [OBJECTIVE_PREFIX + n for n in data.objective])
    for o in data.objects:
        cells = [MULTI_SEP.join(h.labels[v] for v in vals) for h, vals in zip(data.hierarchies, o.values)]
        w.writerow([o.object_id] + cells + [_fmt_num(x) for x in o.objective])
    return buf.getvalue()


def format_users(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write(USERS_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user_id"] + data.attributes)
    for u in data.users:
        cells = [INDIFFERENT_MARK if vals is None else MULTI_SEP.join(h.labels[v] for v in vals)
                 for h, vals in zip(data.hierarchies, u.values)]
        w.writerow([u.user_id] + cells)
    return buf.getvalue()


def _hierarchy_files(directory: Path):
    return sorted(p for p in directory.iterdir() if p.suffix in (".hier", ".txt") and p.is_file())


def load_dataset(directory=None, objects=None, users=None, hierarchy_dir=None, lexicographic=False) -> Dataset:
    """Load ``*.hier`` hierarchies, ``objects.csv`` and ``users.csv``.

    Explicit ``objects``/``users``/``hierarchy_dir`` paths override the
    files inside ``directory``.
    """
    directory = Path(directory) if directory is not None else None
    hdir = Path(hierarchy_dir) if hierarchy_dir else directory
    if hdir is None:
        raise ValueError("no hierarchy directory given")
    hs = {}
    for p in _hierarchy_files(hdir):
        if p.suffix == ".txt" and p.stem in ("ground_truth",):
            continue
        h = load_hierarchy(p, lexicographic=lexicographic)
        hs[h.attribute] = h
    opath = Path(objects) if objects else directory / "objects.csv"
    otext = opath.read_text(encoding="utf-8")
    header = next(r for _, r in _data_rows(otext, opath))
    order = [c.strip() for c in header[1:] if not c.strip().startswith(OBJECTIVE_PREFIX)]
    missing = [a for a in order if a not in hs]
    if missing:
        raise DataError(f"{opath}:1: no hierarchy file for attribute(s) {missing}")
    hierarchies = [hs[a] for a in order]
    objs, objective = read_objects(otext, hierarchies, str(opath))
    ulist = []
    upath = Path(users) if users else (directory / "users.csv" if directory else None)
    if upath is not None and upath.exists():
        ulist = read_users(upath.read_text(encoding="utf-8"), hierarchies, str(upath))
    return Dataset(hierarchies, objs, ulist, objective)


def save_dataset(data: Dataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for h in data.hierarchies:
        (directory / f"{h.attribute}.hier").write_text(format_hierarchy(h), encoding="utf-8")
    (directory / "objects.csv").write_text(format_objects(data), encoding="utf-8")
    if data.users:
        (directory / "users.csv").write_text(format_users(data), encoding="utf-8")
