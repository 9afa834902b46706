from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcpref.dominance import leafset_degree_table
from gcpref.model import (
    DICE,
    JACCARD,
    OVERLAP,
    CustomSimilarity,
    DataError,
    DegreeTable,
    degree_table,
    format_objects,
    format_users,
    get_similarity,
    load_dataset,
    matching_degree,
    matching_vector,
    read_objects,
    read_users,
    save_dataset,
)
from gcpref.synthetic import random_dataset

# matching vectors of the running example (objects o1..o4, users u1..u3), frozen from the source tables
RUNNING_VECTORS = {
    ("o1", "u1"): (F(1, 2), F(1, 2), F(1, 6), 1, 1),
    ("o1", "u2"): (0, 1, 1, 1, 0),
    ("o1", "u3"): (0, 1, 0, 1, 1),
    ("o2", "u1"): (F(1, 4), 0, 0, 0, 0),
    ("o2", "u2"): (1, 1, 1, 1, 1),
    ("o2", "u3"): (F(1, 2), 1, 1, 1, 1),
    ("o3", "u1"): (0, F(1, 2), 0, 0, 0),
    ("o3", "u2"): (0, 1, 1, 1, 0),
    ("o3", "u3"): (0, 1, 0, 1, 1),
    ("o4", "u1"): (0, 0, 0, 0, 0),
    ("o4", "u2"): (0, 1, 1, 1, 0),
    ("o4", "u3"): (0, 1, 0, 1, 1),
}


def test_running_example_vectors_exact(running):
    for o in running.objects:
        for u in running.users:
            mv = matching_vector(running, o, u, exact=True)
            assert tuple(mv.degrees) == tuple(F(x) for x in RUNNING_VECTORS[o.object_id, u.user_id])


def test_running_example_table_floats(running_table):
    for i, o in enumerate(running_table.object_ids):
        for j, u in enumerate(running_table.user_ids):
            expect = np.array([float(F(x)) for x in RUNNING_VECTORS[o, u]])
            assert np.array_equal(running_table.values[i, j], expect)


def test_indifferent_attribute_is_one(running):
    u2 = running.users[1]
    k = running.attribute_index("Attire")
    assert u2.values[k] is None
    assert all(matching_degree(running, o, u2, k) == 1 for o in running.objects)


def test_multi_valued_user_takes_best_pair(running):
    # u2 likes French or Chinese; o2 is French
    assert matching_degree(running, running.objects[1], running.users[1], "Cuisine", exact=True) == 1


def test_multi_value_modes(running):
    u = running.make_user("x", {"Cuisine": ["French", "Chinese", "European"]})
    o = running.objects[1]
    got = {m: matching_degree(running, o, u, "Cuisine", exact=True, multi=m) for m in ("max", "min", "avg")}
    assert got == {"max": 1, "min": 0, "avg": F(1 + 0 + F(1, 4), 3)}


def test_similarities_on_cardinalities():
    # |x|=2, |x∩y|=1, |x∪y|=4, |y|=3
    assert JACCARD.exact(2, 1, 4, 3) == F(1, 4)
    assert OVERLAP.exact(2, 1, 4, 3) == F(1, 2)
    assert DICE.exact(2, 1, 4, 3) == F(2, 5)
    assert get_similarity("dice") is DICE
    with pytest.raises(ValueError):
        get_similarity("cosine")


def test_custom_similarity(running):
    f = CustomSimilarity(lambda nx, inter, union, ny: F(inter, ny), name="recall")
    t = degree_table(running, f=f)
    assert t.values.max() <= 1 and t.values.min() >= 0
    # |y| <= |x ∪ y| so this ratio never falls below Jaccard
    assert np.all(t.values >= degree_table(running).values)


@given(st.integers(0, 5_000), st.booleans(), st.booleans(), st.sampled_from(["jaccard", "overlap", "dice"]))
def test_table_matches_leaf_set_oracle(seed, dag, multi, f):
    data = random_dataset(seed, n_objects=12, d=3, n_users=3, dag=dag, multi=multi)
    assert np.array_equal(degree_table(data, f=f).values, leafset_degree_table(data, f).values)


@given(st.integers(0, 5_000))
def test_float_degrees_are_rounded_exact_ratios(seed):
    data = random_dataset(seed, n_objects=6, d=2, n_users=2, dag=True)
    t = degree_table(data)
    for i, o in enumerate(data.objects):
        for j, u in enumerate(data.users):
            ex = matching_vector(data, o, u, exact=True).degrees
            assert tuple(float(x) for x in ex) == tuple(t.values[i, j])


def test_degrees_bounded_and_norm(running_table):
    assert running_table.values.min() >= 0 and running_table.values.max() <= 1
    assert running_table.vector(0, 0).norm == pytest.approx(0.5 + 0.5 + 1 / 6 + 2)


def test_from_array_and_subsets():
    t = DegreeTable.from_array(np.zeros((3, 2, 1)))
    assert t.object_ids == ["o1", "o2", "o3"] and t.user_ids == ["u1", "u2"]
    assert t.subset_objects([2]).object_ids == ["o3"]
    assert t.subset_users([1]).n_users == 1
    with pytest.raises(ValueError):
        DegreeTable.from_array(np.zeros((3, 2)))


def test_csv_round_trip(running, tmp_path):
    save_dataset(running, tmp_path)
    again = load_dataset(tmp_path)
    assert again.objects == running.objects and again.users == running.users
    assert format_objects(again) == format_objects(running)
    assert format_users(again) == format_users(running)


def test_objective_columns(running):
    text = "object_id,Cuisine,Attire,Place,Price,Parking,obj:stars\na,French,Formal,Queens,$,No,4.5\n"
    objs, names = read_objects(text, running.hierarchies)
    assert names == ["stars"] and objs[0].objective == (4.5,)


@pytest.mark.parametrize(
    "text, match",
    [
        ("object_id,Cuisine,Attire,Place,Price,Parking\na,Klingon,Formal,Queens,$,No\n", r"objects.csv:2: .*Klingon"),
        ("object_id,Cuisine,Attire,Place,Price,Parking\na,French,-,Queens,$,No\n", r"objects.csv:2"),
        ("object_id,Cuisine,Attire,Place,Price,Parking\na,French,Formal\n", r"objects.csv:2"),
        ("object_id,Cuisine,Attire,Place,Price,Parking\na,French,Formal,Queens,$,No\na,French,Formal,Queens,$,No\n",
         r"objects.csv:3"),
    ],
)
def test_object_errors_name_line(running, text, match):
    with pytest.raises(DataError, match=match):
        read_objects(text, running.hierarchies, "objects.csv")


def test_user_errors_name_line(running):
    with pytest.raises(DataError, match=r"users.csv:3"):
        read_users("user_id,Cuisine,Attire,Place,Price,Parking\nu1,French,-,-,-,-\nu2,-,-,-,-,-\n",
                   running.hierarchies, "users.csv")


def test_version_line_written(running):
    assert format_objects(running).startswith("# gcp-objects v1\n")
    assert format_users(running).startswith("# gcp-users v1\n")


@given(st.integers(0, 5_000), st.booleans())
def test_random_round_trip(tmp_path_factory, seed, multi):
    data = random_dataset(seed, n_objects=8, d=2, n_users=3, multi=multi, n_objective=1)
    d = tmp_path_factory.mktemp("rt")
    save_dataset(data, d)
    again = load_dataset(d)
    assert format_objects(again) == format_objects(data)
    assert format_users(again) == format_users(data)


def test_from_array_sets_indifferent_cells_to_one():
    t = DegreeTable.from_array(np.zeros((2, 1, 2)), np.array([[True, False]]))
    assert t.values[:, 0, 1].tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        DegreeTable.from_array(np.zeros((2, 1, 2)), np.array([True, False]))
