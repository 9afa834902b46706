import pytest
from hypothesis import given, strategies as st
import numpy as np

from gcpref.hierarchy import (
    CycleError,
    DuplicateLabelError,
    EmptyHierarchyError,
    HierarchyError,
    MultipleRootsError,
    format_hierarchy,
    label,
    label_tree,
    merge_intervals,
    parse_hierarchy,
    set_cardinalities,
)
from gcpref.synthetic import random_dag_text, random_tree_text

ATTIRE = "#attribute\tAttire\n0\tAttire\n1\tFormal\n1\tCasual\n2\tSmart casual\n2\tBusiness casual\n1\tStreet wear\n"


def test_parse_attire():
    h = parse_hierarchy(ATTIRE)
    assert h.attribute == "Attire"
    assert len(h) == 6
    assert [h.labels[v] for v in h.leaves()] == ["Formal", "Smart casual", "Business casual", "Street wear"]
    assert h.height() == 3
    assert not h.is_dag


def test_tree_labels_follow_leaf_order():
    lab = label(parse_hierarchy(ATTIRE))
    assert lab.of_label("Formal") == ((0, 1),)
    assert lab.of_label("Casual") == ((1, 3),)
    assert lab.of_label("Street wear") == ((3, 4),)
    assert lab.of_label("Attire") == ((0, 4),)
    assert lab.single_interval


def test_running_example_cuisine_intervals(running):
    lab = running.labelings[running.attribute_index("Cuisine")]
    assert lab.of_label("European") == ((2, 6),)
    assert lab.of_label("Eastern") == ((4, 6),)
    assert lab.of_label("Mexican") == ((7, 8),)


def test_cardinalities_jaccard_example():
    lab = label(parse_hierarchy(ATTIRE))
    nx, inter, union = set_cardinalities(lab.of_label("Business casual"), lab.of_label("Casual"))
    assert (nx, inter, union) == (1, 1, 2)


def test_single_child_chain_collapses_to_alias():
    h = parse_hierarchy("0\tR\n1\tA\n2\tB\n3\tC\n1\tD\n")
    assert "B" not in h.labels and "C" in h.labels
    assert h.node("A") == h.node("C") == h.node("B")
    lab = label(h)
    assert lab.leaf_count(h.node("A")) == 1


def test_dag_shared_leaf_gets_two_pieces():
    text = "0\tR\n1\tA\n2\ta1\n2\ta2\n1\tB\n2\tb1\n2\tb2\n#extra\tb1\tA\n"
    h = parse_hierarchy(text)
    assert h.is_dag
    with pytest.raises(ValueError):
        label_tree(h)
    lab = label(h)
    assert lab.of_label("A") == ((0, 3),)
    assert lab.of_label("B") == ((2, 4),)
    assert set_cardinalities(lab.of_label("A"), lab.of_label("B")) == (3, 1, 4)


@pytest.mark.parametrize(
    "text, exc, line",
    [
        ("", EmptyHierarchyError, None),
        ("0\tR\n0\tS\n", MultipleRootsError, 2),
        ("0\tR\n1\tA\n1\tA\n", DuplicateLabelError, 3),
        ("0\tR\n2\tA\n", HierarchyError, 2),
        ("0\tR\nx\tA\n", HierarchyError, 2),
        ("0\tR\n1\tA\n2\tB\n#extra\tA\tB\n", CycleError, None),
        ("0\tR\n1\tA\n#extra\tZ\tR\n", HierarchyError, 3),
    ],
)
def test_malformed_documents(text, exc, line):
    with pytest.raises(exc) as info:
        parse_hierarchy(text)
    assert info.value.line == line


def test_load_error_names_file(tmp_path):
    from gcpref.hierarchy import load_hierarchy

    p = tmp_path / "bad.hier"
    p.write_text("0\tR\n0\tS\n")
    with pytest.raises(HierarchyError, match=r"bad.hier: line 2"):
        load_hierarchy(p)


def test_lexicographic_order():
    h = parse_hierarchy("#order\tlexicographic\n0\tR\n1\tb\n1\ta\n")
    assert [h.labels[v] for v in label(h).leaf_order] == ["a", "b"]


def test_merge_intervals():
    assert merge_intervals([(3, 4), (0, 1), (1, 2), (5, 5)]) == ((0, 2), (3, 4))


def _check_identities(h):
    lab = label(h)
    n = len(h)
    leafsets = [h.reachable_leaves(v) for v in range(n)]
    # label positions are a bijection on the leaves
    pos = {v: i for i, v in enumerate(lab.leaf_order)}
    for v in range(n):
        covered = {i for lo, hi in lab.intervals[v] for i in range(lo, hi)}
        assert covered == {pos[x] for x in leafsets[v]}
    for x in range(n):
        for y in range(n):
            nx, inter, union = set_cardinalities(lab.intervals[x], lab.intervals[y])
            assert (nx, inter, union) == (len(leafsets[x]), len(leafsets[x] & leafsets[y]), len(leafsets[x] | leafsets[y]))


@given(st.integers(0, 10_000), st.integers(2, 40), st.booleans())
def test_interval_identities_match_leaf_sets(seed, leaves, dag):
    rng = np.random.default_rng(seed)
    text = random_dag_text(rng, leaves) if dag else random_tree_text(rng, leaves)
    _check_identities(parse_hierarchy(text))


@given(st.integers(0, 10_000), st.booleans())
def test_format_round_trip(seed, dag):
    rng = np.random.default_rng(seed)
    text = random_dag_text(rng, 12) if dag else random_tree_text(rng, 12)
    h = parse_hierarchy(text)
    again = parse_hierarchy(format_hierarchy(h))
    assert again.labels == h.labels and again.parents == h.parents and again.children == h.children
    assert format_hierarchy(again) == format_hierarchy(h)
