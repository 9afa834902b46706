"""Walk through the four-restaurant, three-user fixture.

Prints every matching vector as exact fractions, the collectively maximal
objects found by each algorithm, the p-relaxed sets and the tiered ranking.

    python demos/running_example.py
"""

from gcpref.dominance import Counters
from gcpref.model import degree_table, matching_vector
from gcpref.ranking import rank_cm
from gcpref.skyline import bsl, p_bsl
from gcpref.spatial import build_index, ind, p_ind
from gcpref.workbench import open_dataset


def fmt(v):
    return "<" + ", ".join(str(x) for x in v) + ">"


def main():
    data = open_dataset("running_example")
    names = lambda idx: [data.objects[i].object_id for i in idx]

    print("matching vectors (" + ", ".join(data.attributes) + ")")
    for o in data.objects:
        row = [fmt(matching_vector(data, o, u, exact=True).degrees) for u in data.users]
        print(f"  {o.object_id}: " + "  ".join(row))

    table = degree_table(data)
    for inner in ("bnl", "sfs", "bbs"):
        c = Counters()
        print(f"bsl-{inner}: {names(bsl(data, inner=inner, counters=c))}  {c}")

    trace, c = [], Counters()
    cm = ind(build_index(data, capacity=2), trace=trace, counters=c)
    print(f"ind: {names(cm)}  {c}")
    print("  pops: " + ", ".join(k if k == "node" else data.objects[i].object_id for k, i in trace))

    ix = build_index(data, capacity=2)
    for p in (30, 60, 100):
        print(f"p={p}: p-ind {names(p_ind(ix, p)[1])}  p-bsl {names(p_bsl(table, p)[1])}")

    print("tiers:")
    print(rank_cm(table).format())


if __name__ == "__main__":
    main()
