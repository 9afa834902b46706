from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcpref.dominance import (
    LITERAL,
    STANDARD,
    Counters,
    DominanceConfig,
    Preference,
    Window,
    brute_force_cm,
    brute_force_pcm,
    collectively_preferred,
    dominates_rows,
    first_dominator,
    p_collectively_preferred,
    preferred,
    threshold,
    user_counts,
)
from gcpref.model import DegreeTable


def _idx(table, oid):
    return table.object_ids.index(oid)


def test_strict_preference_for_one_user():
    assert preferred([0, 0.5, 0, 0, 0], [0, 0, 0, 0, 0]) is Preference.STRICT


def test_identical_vectors_preferred_not_strict():
    assert preferred([0.3, 1], [0.3, 1]) is Preference.PREFERRED


def test_incomparable_vectors():
    assert preferred([1, 0], [0, 1]) is Preference.NEITHER
    assert not Preference.NEITHER.is_preferred


def test_unspecified_coordinates_ignored():
    assert preferred([0, 1], [1, 0], specified=[False, True]) is Preference.STRICT


def test_objective_values_strictness_modes():
    # equal degrees, better objective
    assert preferred([1], [1], obj_a=[5], obj_b=[4]) is Preference.STRICT
    assert preferred([1], [1], obj_a=[5], obj_b=[4], mode=LITERAL) is Preference.PREFERRED
    assert preferred([1], [0.5], obj_a=[5], obj_b=[4], mode=LITERAL) is Preference.STRICT
    assert preferred([1], [0.5], obj_a=[3], obj_b=[4]) is Preference.NEITHER


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        preferred([1, 0], [1])


def test_running_example_collective(running_table):
    t = running_table
    o1, o2, o3, o4 = (_idx(t, o) for o in ("o1", "o2", "o3", "o4"))
    assert collectively_preferred(t, o1, o3)
    assert not collectively_preferred(t, o1, o1)
    assert p_collectively_preferred(t, o2, o1, 60)
    assert p_collectively_preferred(t, o1, o2, 30)
    assert not p_collectively_preferred(t, o1, o2, 60)


def test_running_example_maximal_sets(running_table):
    t = running_table
    ids = lambda xs: {t.object_ids[i] for i in xs}
    assert ids(brute_force_cm(t)) == {"o1", "o2"}
    assert ids(brute_force_pcm(t, 60)) == {"o2"}
    assert ids(brute_force_pcm(t, 30)) == set()
    assert ids(brute_force_pcm(t, 100)) == {"o1", "o2"}


def test_counters_count_comparisons(running_table):
    c = Counters()
    collectively_preferred(running_table, 0, 1, counters=c)
    assert c.dominance_checks >= 1


@pytest.mark.parametrize("p, m, k", [(60, 3, 2), (30, 3, 1), (100, 3, 3), (50, 4, 2), (Fraction(100, 3), 3, 1),
                                     (10, 10, 1), (70, 10, 7), (1, 8, 1)])
def test_threshold_exact(p, m, k):
    assert threshold(p, m) == k


@given(st.integers(1, 100), st.integers(1, 64))
def test_threshold_is_least_sufficient_count(p, m):
    k = threshold(p, m)
    assert Fraction(k, m) * 100 >= p
    assert k == 1 or Fraction(k - 1, m) * 100 < p


@pytest.mark.parametrize("p", [0, -5, 101])
def test_threshold_rejects(p):
    with pytest.raises(ValueError):
        threshold(p, 3)
    with pytest.raises(ValueError):
        DominanceConfig(p)


def test_config_mode():
    assert DominanceConfig(60).k(3) == 2
    with pytest.raises(ValueError):
        DominanceConfig(strictness_mode="lenient")


def _random_table(seed, n=12, m=3, d=2, n_obj=0):
    rng = np.random.default_rng(seed)
    V = rng.choice([0, 0.5, 1.0], size=(n, m, d))
    return DegreeTable.from_array(V, objective=rng.integers(0, 3, size=(n, n_obj)).astype(float))


@given(st.integers(0, 10_000), st.integers(0, 2))
def test_cm_is_undominated_and_everything_else_is_dominated(seed, n_obj):
    t = _random_table(seed, n_obj=n_obj)
    cm = set(brute_force_cm(t))
    for b in range(t.n_objects):
        beaten = any(collectively_preferred(t, a, b) for a in range(t.n_objects) if a != b)
        assert beaten == (b not in cm)
    assert cm  # a finite strict order always has maximal elements


@given(st.integers(0, 10_000), st.integers(1, 100))
def test_pcm_nested_in_cm_and_unanimity(seed, p):
    t = _random_table(seed, m=4)
    cm = brute_force_cm(t)
    assert set(brute_force_pcm(t, p)) <= set(cm)
    assert brute_force_pcm(t, 100) == cm


def _sequential(rows, objs, evict):
    kept = []
    for i in range(len(rows)):
        if any(dominates_rows(rows[[j]], objs[[j]], rows[i], objs[i])[0] for j in kept):
            continue
        if evict:
            kept = [j for j in kept if not dominates_rows(rows[[i]], objs[[i]], rows[j], objs[j])[0]]
        kept.append(i)
    return kept


@given(st.integers(0, 10_000), st.booleans(), st.integers(1, 5))
def test_window_batches_equal_one_at_a_time(seed, evict, n_batches):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 60))
    rows = rng.choice([0, 0.5, 1.0], size=(n, 4))
    objs = np.zeros((n, 0))
    w = Window(4, 0, n)
    cuts = np.sort(rng.choice(np.arange(1, n + 1), size=min(n, n_batches), replace=False))
    start = 0
    for c in cuts:
        w.offer(rows[start:c], objs[start:c], np.arange(start, c), evict=evict)
        start = c
    if start < n:
        w.offer(rows[start:], objs[start:], np.arange(start, n), evict=evict)
    assert w.ids == _sequential(rows, objs, evict)


def test_window_overflow_callback():
    rows = np.eye(3)
    w = Window(3, 0, 2)
    spilled = []
    w.offer(rows, np.zeros((3, 0)), [0, 1, 2], overflow=spilled.append)
    assert w.ids == [0, 1] and spilled == [2]
    with pytest.raises(OverflowError):
        Window(3, 0, 1).offer(rows, np.zeros((3, 0)), [0, 1, 2])


def test_window_remove_where_by_tag():
    w = Window(2, 0, 4)
    w.offer(np.eye(2), np.zeros((2, 0)), [5, 6], tag=lambda i: i)
    assert w.remove_where(lambda t: t == 0) == [5]
    assert w.ids == [6]


def test_first_dominator():
    rows = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.5]])
    assert first_dominator(rows, np.zeros((3, 0)), np.array([0.5, 0.5]), np.zeros(0)) == 1
    assert first_dominator(rows, np.zeros((3, 0)), np.array([1.0, 1.0]), np.zeros(0)) == -1


def test_standard_mode_constant():
    assert STANDARD != LITERAL


@given(st.integers(0, 10_000), st.integers(0, 1))
def test_reverse_user_counts_swap_roles(seed, n_obj):
    t = _random_table(seed, n=8, m=4, n_obj=n_obj)
    V, O, spec = t.values, t.objective, t.specified
    for b in range(t.n_objects):
        rp, rs = user_counts(V, O, V[b], O[b], spec, reverse=True)
        for a in range(t.n_objects):
            fp, fs = user_counts(V[[b]], O[[b]], V[a], O[a], spec)
            assert (rp[a], rs[a]) == (fp[0], fs[0])


def test_mutual_p_preference_excludes_both():
    # each object wins strictly for one of two users; at p=50 each p-dominates the other
    t = DegreeTable.from_array(np.array([[[1.0], [0.0]], [[0.0], [1.0]]]))
    assert p_collectively_preferred(t, 0, 1, 50) and p_collectively_preferred(t, 1, 0, 50)
    assert brute_force_cm(t) == [0, 1]
    assert brute_force_pcm(t, 50) == []
    assert brute_force_pcm(t, 51) == [0, 1]
