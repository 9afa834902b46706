import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcpref.dominance import Counters, brute_force_cm, brute_force_pcm
from gcpref.model import degree_table
from gcpref.spatial import (
    ObjectIndex,
    Query,
    audit_bounds,
    build_index,
    entry_bounds,
    ind,
    max_matching_degree,
    p_ind,
    score,
    transform,
)
from gcpref.synthetic import random_dataset


def _names(data, idx):
    return {data.objects[i].object_id for i in idx}


def test_running_example_rectangle(running):
    (lo, hi), = transform(running, running.objects[0], attrs=[0, 1])
    assert lo.tolist() == [4, 2] and hi.tolist() == [6, 3]


def test_leaf_value_gives_unit_box(running):
    o = running.objects[3]
    for lo, hi in transform(running, o, attrs=[4]):
        assert (hi - lo).tolist() == [1]


def test_multi_values_expand(running):
    o = running.make_object("x", {"Cuisine": ["French", "Chinese"], "Attire": ["Formal", "Street wear"],
                                  "Place": "Queens", "Price": "$", "Parking": "No"})
    assert len(transform(running, o)) == 4


def test_running_example_grouping(running):
    t = build_index(running, capacity=2).tree
    root = t.nodes[t.root]
    groups = sorted(sorted(_names(running, t.leaf_items(int(c)))) for c in root.children)
    assert groups == [["o1", "o2"], ["o3", "o4"]]


def test_small_set_single_leaf(running):
    t = build_index(running, capacity=8).tree
    assert len(t) == 1


def test_jaccard_range_bound(running):
    q = Query.prepare(build_index(running, capacity=2), running.users, size_cap=False)
    # u1 likes European, interval [2, 6); an entry spanning [4, 6) on Cuisine
    lo = np.array([4.0, 0, 0, 0, 0])
    hi = np.array([6.0, 4, 9, 9, 9])
    assert max_matching_degree(q, lo, hi, 0, 0) == 0.5
    far = np.array([7.0, 0, 0, 0, 0]), np.array([8.0, 4, 9, 9, 9])
    assert max_matching_degree(q, *far, 0, 0) == 0.0


def test_leaf_entries_are_exact(running):
    ix = build_index(running, capacity=2)
    q = Query.prepare(ix, running.users)
    exact = q.exact(np.arange(4))
    assert exact[0, 0, 1] == 0.5  # o1, u1, Attire
    assert np.array_equal(exact, degree_table(running).values)


def test_entry_score_of_all_covering_range(running):
    ix = build_index(running, capacity=2)
    q = Query.prepare(ix, running.users)
    lo = np.zeros((1, 5))
    hi = np.full((1, 5), 100.0)
    b = entry_bounds(q, lo, hi)
    assert score(b)[0] == 3 * 5


def test_root_score_dominates_children(running):
    ix = build_index(running, capacity=2)
    q = Query.prepare(ix, running.users)
    t = ix.tree
    root = t.nodes[t.root]
    lo, hi = root.mbr()
    top = score(entry_bounds(q, lo[None], hi[None]))[0]
    kids = score(entry_bounds(q, root.lo, root.hi, ix.size_max[t.root]))
    assert np.all(kids <= top)


def test_running_example_pop_order(running):
    trace, c = [], Counters()
    cm = ind(build_index(running, capacity=2), trace=trace, counters=c)
    assert [running.objects[i].object_id for i in cm] == ["o2", "o1"]
    kinds = [(k, running.objects[i].object_id if k == "object" else "node") for k, i in trace]
    assert kinds == [("node", "node"), ("object", "o2"), ("object", "o1"), ("node", "node")]
    assert c.io_reads > 0 and c.dominance_checks > 0


def test_p_ind_running_example(running):
    ix = build_index(running, capacity=2)
    cm, pcm = p_ind(ix, 60)
    assert _names(running, cm) == {"o1", "o2"} and _names(running, pcm) == {"o2"}
    assert p_ind(ix, 30)[1] == []
    assert sorted(p_ind(ix, 100)[1]) == sorted(cm)


def test_single_object(running):
    one = running.with_objects(running.objects[:1])
    c = Counters()
    assert ind(build_index(one), counters=c) == [0]
    assert c.io_reads == 1


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.booleans(), st.booleans(), st.sampled_from(["jaccard", "overlap", "dice"]),
       st.sampled_from(["str", "rstar"]))
def test_ind_matches_oracle(seed, dag, multi, f, method):
    data = random_dataset(seed, n_objects=40, d=3, n_users=3, dag=dag, multi=multi)
    ix = build_index(data, capacity=4, method=method)
    expect = brute_force_cm(degree_table(data, f=f))
    assert sorted(ind(ix, f=f)) == expect
    assert sorted(ind(ix, f=f, prune=False)) == expect
    assert sorted(ind(ix, f=f, size_cap=False)) == expect


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 100), st.integers(0, 1))
def test_p_ind_matches_oracle(seed, p, n_obj):
    data = random_dataset(seed, n_objects=30, d=2, n_users=5, n_objective=n_obj)
    t = degree_table(data)
    cm, pcm = p_ind(build_index(data, capacity=4), p)
    assert sorted(cm) == brute_force_cm(t)
    assert sorted(pcm) == brute_force_pcm(t, p)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.booleans(), st.sampled_from(["jaccard", "overlap", "dice"]),
       st.sampled_from(["max", "min", "avg"]), st.booleans())
def test_bounds_are_sound(seed, dag, f, multi, cap):
    data = random_dataset(seed, n_objects=50, d=3, n_users=4, dag=dag, multi=dag)
    for attrs in (None, [0, 2]):
        ix = build_index(data, capacity=4, attrs=attrs)
        assert audit_bounds(ix, f=f, multi=multi, size_cap=cap) == []


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_subspace_index(seed):
    data = random_dataset(seed, n_objects=40, d=3, n_users=3)
    ix = build_index(data, capacity=4, attrs=[1])
    assert ix.subspace
    t = ix.tree
    q = Query.prepare(ix, data.users)
    root = t.nodes[t.root]
    if not root.is_leaf:
        b = entry_bounds(q, root.lo, root.hi, ix.size_max[t.root])
        assert np.all(b[:, :, [0, 2]] == 1.0)
    full = ind(build_index(data, capacity=4))
    assert sorted(ind(ix)) == sorted(full) == brute_force_cm(degree_table(data))


def test_subspace_charges_payload_reads(running):
    full, sub = Counters(), Counters()
    ind(build_index(running, capacity=2), counters=full)
    ind(build_index(running, capacity=2, attrs=[0]), counters=sub)
    assert sub.io_reads > full.io_reads


@pytest.mark.parametrize("method", ["str", "rstar"])
def test_index_dump_round_trip(running, method):
    data = random_dataset(11, n_objects=200, d=3)
    ix = build_index(data, capacity=8, method=method)
    text = ix.dump()
    again = ObjectIndex.from_dump(data, text)
    assert again.dump() == text
    assert sorted(ind(again)) == sorted(ind(ix))
    with pytest.raises(ValueError):
        ObjectIndex.from_dump(data, text, attrs=[0])


def test_build_rejects(running):
    with pytest.raises(ValueError):
        build_index(running, attrs=[7])
    with pytest.raises(ValueError):
        build_index(running, method="quad")
