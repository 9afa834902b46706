"""Randomized checks of the fairness properties of the tier ranking.

Each check draws small degree tables from a seeded generator, applies the
transformation the property talks about and compares ranks before and
after. Degrees come from a coarse grid so ties are common.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DegreeTable
from .ranking import rank_cm

__all__ = ["AxiomReport", "AXIOMS", "axiom_suite", "random_table", "resolvability_instance"]

GRID = np.array([0.0, 0.25, 0.5, 0.75])


@dataclass
class AxiomReport:
    name: str
    trials: int = 0
    violations: list[int] = field(default_factory=list)  # seeds

    @property
    def passed(self) -> bool:
        return not self.violations

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" seeds={self.violations[:10]}" if self.violations else ""
        return f"{status} {self.name}: {self.trials} trials, {len(self.violations)} violations{extra}"


def random_table(rng: np.random.Generator, max_objects=7, max_users=5, max_attrs=3) -> DegreeTable:
    n = int(rng.integers(2, max_objects + 1))
    m = int(rng.integers(1, max_users + 1))
    d = int(rng.integers(1, max_attrs + 1))
    return DegreeTable.from_array(rng.choice(GRID, size=(n, m, d)))


def _ranks(values, specified=None):
    return rank_cm(DegreeTable.from_array(values, specified)).ranks


def _favourite(values, a, users):
    """Make every listed user strictly prefer object ``a`` over all others."""
    values[:, users] = np.minimum(values[:, users], 0.75)
    values[a, users] = 1.0


def _majority(rng):
    V = random_table(rng).values.copy()
    n, m, _ = V.shape
    k = m // 2 + 1
    a = int(rng.integers(n))
    users = rng.choice(m, size=k, replace=False)
    _favourite(V, a, users)
    r = _ranks(V)
    others = np.delete(r, a)
    return bool(np.all(r[a] < others))


def _anonymity(rng):
    V = random_table(rng).values
    perm = rng.permutation(V.shape[1])
    return np.array_equal(_ranks(V), _ranks(V[:, perm]))


def _iia(rng):
    V = random_table(rng, max_objects=9).values
    r = _ranks(V)
    m = V.shape[1]
    cm = np.flatnonzero(r <= m)
    non = np.flatnonzero(r > m)
    # drop a random subset of the non-maximal objects
    drop = non[rng.random(len(non)) < 0.5]
    keep = np.setdiff1d(np.arange(len(V)), drop)
    r2 = _ranks(V[keep])
    pos = {int(o): i for i, o in enumerate(keep)}
    if not all(r2[pos[int(o)]] == r[o] for o in cm):
        return False
    # insert objects that some maximal object collectively beats
    extra = []
    for _ in range(int(rng.integers(1, 4))):
        c = V[rng.choice(cm)]
        if not (c > 0).any():
            continue
        new = c.copy()
        pos_cells = np.argwhere(new > 0)
        j, k = pos_cells[rng.integers(len(pos_cells))]
        new[j, k] = GRID[GRID < new[j, k]].max()
        extra.append(new)
    if not extra:
        return True
    r3 = _ranks(np.concatenate([V, np.array(extra)]))
    return bool(np.array_equal(r3[cm], r[cm]) and np.all(r3[len(V):] == m + 1))


def _clones(rng):
    V = random_table(rng).values
    r = _ranks(V)
    m = V.shape[1]
    cm = np.flatnonzero(r <= m)
    a = int(rng.choice(cm))
    # a near copy of a maximal object, slightly worse on one coordinate
    clone = V[a].copy()
    j, k = int(rng.integers(m)), int(rng.integers(V.shape[2]))
    clone[j, k] = clone[j, k] - 1e-3 if clone[j, k] > 0 else clone[j, k]
    if np.array_equal(clone, V[a]):
        clone = np.maximum(clone - 1e-3, 0.0)
        if np.array_equal(clone, V[a]):
            return True
    r2 = _ranks(np.concatenate([V, clone[None]]))
    clone_rank = r2[-1]
    return bool(np.array_equal(r2[:-1], r) and clone_rank == m + 1)


def _monotonicity(rng):
    V = random_table(rng).values
    r = _ranks(V)
    n, m, d = V.shape
    a, j = int(rng.integers(n)), int(rng.integers(m))
    raised = V.copy()
    room = np.flatnonzero(V[a, j] < 1.0)
    if not len(room):
        return True
    k = int(rng.choice(room))
    raised[a, j, k] = rng.choice(np.append(GRID[GRID > V[a, j, k]], 1.0))
    # other coordinates of this user's vector may rise too
    up = rng.random(d) < 0.3
    raised[a, j, up] = np.maximum(raised[a, j, up], rng.choice(GRID, size=int(up.sum())))
    r2 = _ranks(raised)
    if r2[a] > r[a]:
        return False
    others = np.arange(n) != a
    if np.any(r2[others] < r[others]):
        return False
    beaten = r[a] < r
    return bool(np.all(r2[a] < r2[beaten]))


def _participation(rng):
    V = random_table(rng).values
    r = _ranks(V)
    n, m, d = V.shape
    a = int(rng.integers(n))
    beaten = np.flatnonzero(r > r[a])
    extra = int(rng.integers(1, 3))
    new = rng.choice(GRID, size=(n, extra, d))
    new = np.minimum(new, 0.75)
    new[a] = 1.0
    r2 = _ranks(np.concatenate([V, new], axis=1))
    return bool(np.all(r2[a] < r2[beaten]))


def resolvability_instance(rng: np.random.Generator, n_others=None, d=None):
    """Four users split two and two between objects 0 and 1, plus a fifth
    user favouring object 0. Returns ``(values_4, values_5)``."""
    n_others = int(rng.integers(0, 5)) if n_others is None else n_others
    d = int(rng.integers(1, 4)) if d is None else d
    V = rng.choice(GRID, size=(2 + n_others, 5, d))
    _favourite(V, 0, [0, 1, 4])
    _favourite(V, 1, [2, 3])
    return V[:, :4], V


def _resolvability(rng):
    four, five = resolvability_instance(rng)
    r4, r5 = _ranks(four), _ranks(five)
    return bool(r4[0] == 3 and r4[1] == 3 and r5[0] == 3 and r5[1] == 4)


def _neutrality(rng):
    V = random_table(rng).values
    n, m, d = V.shape
    r = _ranks(V)
    po, pu = rng.permutation(n), rng.permutation(m)
    if not np.array_equal(_ranks(V[po][:, pu]), r[po]):
        return False
    # an indifferent attribute and a specified one matching every object fully rank alike
    W = V.copy()
    indifferent = rng.random((m, d)) < 0.3
    W[:, indifferent] = 1.0
    return bool(np.array_equal(_ranks(W, ~indifferent), _ranks(W)))


AXIOMS = {
    "majority": _majority,
    "anonymity": _anonymity,
    "irrelevant_alternatives": _iia,
    "clone_independence": _clones,
    "monotonicity": _monotonicity,
    "participation": _participation,
    "resolvability": _resolvability,
    "neutrality": _neutrality,
}


def axiom_suite(trials: int = 1000, seed: int = 0, names=None) -> list[AxiomReport]:
    """Run every property check ``trials`` times; violations list the trial seeds."""
    names = list(AXIOMS) if names is None else list(names)
    out = []
    for name in names:
        check = AXIOMS[name]
        rep = AxiomReport(name)
        for t in range(trials):
            s = seed * 1_000_003 + t
            if not check(np.random.default_rng(s)):
                rep.violations.append(s)
            rep.trials += 1
        out.append(rep)
    return out
