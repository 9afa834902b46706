"""Tiered group ranking of collectively maximal objects, baseline
aggregation strategies, and top-k list metrics.

The rank of a collectively maximal object is the smallest group size
``tau`` such that every subgroup of at least ``tau`` users still finds it
maximal. Objects outside CM share the bottom rank ``|U| + 1``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .dominance import STANDARD, Counters, brute_force_pcm, user_counts
from .model import DegreeTable

__all__ = [
    "RankResult",
    "rank_cm",
    "rank_by_definition",
    "rank_by_subsets",
    "Strategy",
    "StrategySpec",
    "parse_strategy",
    "user_scalars",
    "strategy_scores",
    "strategy_rank",
    "precision_at_k",
    "spearman_footrule",
    "natural_key",
]


def natural_key(s: str):
    """Sort key that orders ``o2`` before ``o10``."""
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


@dataclass
class RankResult:
    """Rank per object (indexed like the degree table) plus ids."""

    ranks: np.ndarray
    object_ids: list[str]
    n_users: int

    def rank_of(self, object_id: str) -> int:
        return int(self.ranks[self.object_ids.index(object_id)])

    def as_dict(self) -> dict[str, int]:
        return {o: int(r) for o, r in zip(self.object_ids, self.ranks)}

    @property
    def tiers(self) -> list[tuple[int, list[str]]]:
        """``(rank, ids)`` in ascending rank; ids in table order."""
        out = []
        for r in sorted(set(int(x) for x in self.ranks)):
            out.append((r, [o for o, x in zip(self.object_ids, self.ranks) if x == r]))
        return out

    def ordered(self) -> list[str]:
        """All object ids, best tier first."""
        return [o for _, ids in self.tiers for o in ids]

    def format(self) -> str:
        return "\n".join(f"{r}: {' '.join(ids)}" for r, ids in self.tiers)


def _cm_of(table, mode):
    from .skyline import bsl

    return bsl(table, inner="sfs", mode=mode)


def rank_cm(table: DegreeTable, cm=None, counters: Counters | None = None, mode=STANDARD) -> RankResult:
    """Ranks by escalating ``tau`` against every other CM member.

    For each member ``o_i`` the rank starts at 1; against each rival
    ``o_j`` it is raised to ``tau + 1`` while ``o_j`` is p-collectively
    preferred over ``o_i`` at ``p = tau/|U|*100``, for ``tau`` up to
    ``|U| - 1``. ``cm`` (object indices) is computed when not given.
    """
    counters = counters if counters is not None else Counters()
    m = table.n_users
    cm = _cm_of(table, mode) if cm is None else [int(i) for i in cm]
    ranks = np.full(table.n_objects, m + 1, dtype=np.int64)
    if not cm:
        return RankResult(ranks, list(table.object_ids), m)
    vals = table.values[cm]
    objv = table.objective[cm]
    for pos, i in enumerate(cm):
        # one pass gives, per rival, how many users prefer it and whether any strictly
        n_pref, strict = user_counts(vals, objv, table.values[i], table.objective[i], table.specified, mode)
        counters.add_checks(m * (len(cm) - 1))
        r = 1
        for j in range(len(cm)):
            if j == pos or not strict[j]:
                continue
            tau = r
            while tau <= m - 1:
                # rival p-preferred at p = tau/|U|*100 means at least tau users prefer it
                if n_pref[j] >= tau:
                    r = tau + 1
                else:
                    break
                tau += 1
        ranks[i] = r
    return RankResult(ranks, list(table.object_ids), m)


def rank_by_definition(table: DegreeTable, mode=STANDARD) -> RankResult:
    """Smallest ``tau`` with the object in p-CM for every ``p >= tau/|U|*100``.

    Built on the brute-force CM/p-CM oracles; only integer multiples of
    ``100/|U|`` need checking since the user threshold is a step function.
    """
    from .dominance import brute_force_cm

    m = table.n_users
    cm = brute_force_cm(table, mode)
    ranks = np.full(table.n_objects, m + 1, dtype=np.int64)
    member = {t: set(brute_force_pcm(table, Fraction(100 * t, m), mode, cm)) for t in range(1, m + 1)}
    for i in cm:
        tau = m
        while tau > 1 and i in member[tau - 1]:
            tau -= 1
        ranks[i] = tau
    return RankResult(ranks, list(table.object_ids), m)


def rank_by_subsets(table: DegreeTable) -> RankResult:
    """Smallest ``tau`` such that every subgroup of size ``>= tau`` finds the
    object undominated among all objects. Exponential in ``|U|``; small
    groups only. Standard strictness.
    """
    m = table.n_users
    V = table.values
    n = table.n_objects
    obj = table.objective
    ranks = np.full(n, m + 1, dtype=np.int64)

    def dominated(i, users):
        sub = V[:, users]
        ge = np.all(sub >= V[i, users], axis=(1, 2)) & np.all(obj >= obj[i], axis=1)
        gt = np.any(sub > V[i, users], axis=(1, 2)) | np.any(obj > obj[i], axis=1)
        return bool(np.any(ge & gt))

    for i in range(n):
        if dominated(i, list(range(m))):
            continue
        tau = 1
        for size in range(m - 1, 0, -1):
            if any(dominated(i, list(s)) for s in combinations(range(m), size)):
                tau = size + 1
                break
        ranks[i] = tau
    return RankResult(ranks, list(table.object_ids), m)


# --------------------------------------------------------------------------
# baseline strategies


class Strategy(enum.Enum):
    ADD = "add"
    MULT = "mult"
    MISERY = "misery"
    PLEASURE = "pleasure"
    AVG_MISERY = "avg_misery"
    AVG_MISERY_PLUS = "avg_misery_plus"
    COPELAND = "copeland"
    APPROVAL = "approval"
    BORDA = "borda"


@dataclass(frozen=True)
class StrategySpec:
    strategy: Strategy
    threshold: float = 0.5

    def __post_init__(self):
        if not isinstance(self.strategy, Strategy):
            object.__setattr__(self, "strategy", parse_strategy(self.strategy))
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")

    @property
    def name(self) -> str:
        return self.strategy.name


def parse_strategy(name) -> Strategy:
    if isinstance(name, Strategy):
        return name
    key = str(name).strip().lower().replace("+", "_plus").replace("-", "_")
    for s in Strategy:
        if key in (s.value, s.name.lower()):
            return s
    raise ValueError(f"unknown strategy {name!r}; expected one of {', '.join(s.name for s in Strategy)}")


def user_scalars(table: DegreeTable) -> np.ndarray:
    """``(objects, users)``: mean degree over each user's specified attributes.

    A user with no specified attribute gets 1 for every object.
    """
    spec = table.specified.astype(float)[None]
    count = spec.sum(axis=2)
    total = (table.values * spec).sum(axis=2)
    return np.where(count > 0, total / np.maximum(count, 1), 1.0)


def _borda(col):
    # ascending positions 0, 1, ...; tied values share the mean of their positions
    order = np.argsort(col, kind="stable")
    pos = np.empty(len(col))
    pos[order] = np.arange(len(col), dtype=float)
    out = np.empty(len(col))
    for v in np.unique(col):
        at = col == v
        out[at] = pos[at].mean()
    return out


def _copeland(S, chunk=512):
    # an object beats a rival when more users score it higher than lower;
    # score = rivals beaten minus rivals it loses to
    out = np.zeros(len(S))
    for a in range(0, len(S), chunk):
        A = S[a: a + chunk, None, :]
        margin = (A > S[None]).sum(axis=2) - (A < S[None]).sum(axis=2)
        out[a: a + chunk] = (margin > 0).sum(axis=1) - (margin < 0).sum(axis=1)
    return out


def strategy_scores(table: DegreeTable, spec: StrategySpec) -> np.ndarray:
    S = user_scalars(table)
    s, t = spec.strategy, spec.threshold
    if s is Strategy.ADD:
        return S.sum(axis=1)
    if s is Strategy.MULT:
        return S.prod(axis=1)
    if s is Strategy.MISERY:
        return S.min(axis=1)
    if s is Strategy.PLEASURE:
        return S.max(axis=1)
    if s is Strategy.AVG_MISERY:
        keep = S >= t
        cnt = keep.sum(axis=1)
        return np.where(cnt > 0, (S * keep).sum(axis=1) / np.maximum(cnt, 1), 0.0)
    if s is Strategy.AVG_MISERY_PLUS:
        low = S.min(axis=1, keepdims=True)
        keep = S > low
        cnt = keep.sum(axis=1)
        return np.where(cnt > 0, (S * keep).sum(axis=1) / np.maximum(cnt, 1), low[:, 0])
    if s is Strategy.APPROVAL:
        return (S >= t).sum(axis=1).astype(float)
    if s is Strategy.COPELAND:
        return _copeland(S)
    if s is Strategy.BORDA:
        return np.sum([_borda(col) for col in S.T], axis=0) if S.shape[1] else np.zeros(len(S))
    raise ValueError(f"unhandled strategy {s}")


def strategy_rank(table: DegreeTable, spec: StrategySpec | str) -> list[str]:
    """Object ids by descending score; ties broken by object id."""
    if not isinstance(spec, StrategySpec):
        spec = StrategySpec(parse_strategy(spec))
    scores = strategy_scores(table, spec)
    order = sorted(range(table.n_objects), key=lambda i: (-scores[i], natural_key(table.object_ids[i])))
    return [table.object_ids[i] for i in order]


# --------------------------------------------------------------------------
# metrics


def precision_at_k(result, truth, k: int) -> float:
    """Share of the top ``k`` of ``truth`` found in the top ``k`` of ``result``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return len(set(list(result)[:k]) & set(list(truth)[:k])) / k


def spearman_footrule(result, truth, k: int) -> float:
    """Footrule distance between two top-k lists, scaled to ``[0, 1]``.

    Items missing from a list sit at position ``k + 1``. The scale is the
    distance between two disjoint lists, ``k (k + 1)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a, b = list(result)[:k], list(truth)[:k]
    if not a and not b:
        raise ValueError("both lists are empty")
    pa = {x: i + 1 for i, x in enumerate(a)}
    pb = {x: i + 1 for i, x in enumerate(b)}
    total = sum(abs(pa.get(x, k + 1) - pb.get(x, k + 1)) for x in set(a) | set(b))
    return total / (k * (k + 1))
