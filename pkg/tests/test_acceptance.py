"""Acceptance criteria 1-8; each records one PASS/FAIL line."""

import csv
import io
import time
from fractions import Fraction as F

import numpy as np

from gcpref.axioms import axiom_suite
from gcpref.dominance import brute_force_cm, brute_force_pcm
from gcpref.hierarchy import label, parse_hierarchy, set_cardinalities
from gcpref.model import degree_table, matching_vector
from gcpref.ranking import precision_at_k, rank_by_definition, rank_cm, spearman_footrule
from gcpref.skyline import bsl, p_bsl
from gcpref.spatial import audit_bounds, build_index, ind, p_ind
from gcpref.synthetic import SyntheticConfig, gen_synthetic, random_dag_text, random_dataset, random_tree_text
from gcpref.workbench import EVAL_FIELDS, RunParams, bundled, evaluate, open_dataset, read_ground_truth, \
    run_experiment, write_reports

from test_model import RUNNING_VECTORS

PS = list(range(10, 101, 10))


def test_criterion_1_running_example(verdict):
    t0 = time.perf_counter()
    data = open_dataset("running_example")
    table = degree_table(data)
    exact_ok = float_ok = True
    for i, o in enumerate(data.objects):
        for j, u in enumerate(data.users):
            want = tuple(F(x) for x in RUNNING_VECTORS[o.object_id, u.user_id])
            exact_ok &= tuple(matching_vector(data, o, u, exact=True).degrees) == want
            float_ok &= bool(np.all(np.abs(table.values[i, j] - np.array([float(x) for x in want])) <= 1e-12))
    ids = lambda xs: {data.objects[i].object_id for i in xs}
    cm = ids(bsl(table))
    ix = build_index(data, capacity=2)
    cm_ind = ids(ind(ix))
    p60 = ids(p_ind(ix, 60)[1])
    p30 = ids(p_bsl(table, 30)[1])
    ranks = rank_cm(table).as_dict()
    elapsed = time.perf_counter() - t0
    ok = (exact_ok and float_ok and cm == cm_ind == {"o1", "o2"} and p60 == {"o2"} and p30 == set()
          and ranks == {"o1": 3, "o2": 2, "o3": 4, "o4": 4} and elapsed < 1.0)
    verdict(1, ok, f"table exact={exact_ok} float={float_ok} CM={sorted(cm)} 60-CM={sorted(p60)} "
                   f"30-CM={sorted(p30)} ranks={ranks} time={elapsed:.3f}s")
    assert ok


def _instance(seed):
    rng = np.random.default_rng(10_000 + seed)
    return random_dataset(seed, n_objects=int(rng.integers(5, 501)), d=int(rng.integers(1, 5)),
                          n_users=int(rng.integers(1, 9)), max_leaves=int(2 ** rng.integers(1, 7)),
                          dag=seed % 3 == 0, multi=seed % 2 == 0, n_objective=int(seed % 7 == 0))


def _instances(n=200):
    for seed in range(n):
        data = _instance(seed)
        yield seed, data, degree_table(data)


def test_criterion_2_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    bad = []
    for seed, data, table in _instances():
        cm = brute_force_cm(table)
        ix = build_index(data, capacity=8)
        got = {"ind": sorted(ind(ix))}
        for inner in ("bnl", "sfs", "bbs"):
            got[f"bsl-{inner}"] = bsl(table, inner=inner, window=16, capacity=8)
        if any(v != cm for v in got.values()):
            bad.append((seed, "cm"))
            continue
        for p in PS:
            want = brute_force_pcm(table, p, cm=cm)
            c1, p1 = p_ind(ix, p)
            c2, p2 = p_bsl(table, p, inner="sfs")
            if sorted(c1) != cm or sorted(p1) != want or p2 != want:
                bad.append((seed, p))
        if not np.array_equal(rank_cm(table, cm=cm).ranks, rank_by_definition(table).ranks):
            bad.append((seed, "rank"))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    verdict(2, ok, f"200 instances, mismatches={bad[:5]} time={elapsed:.1f}s")
    assert ok


def _leafsets(h):
    # reachable leaves by plain depth-first search over the child lists
    out = []
    for v in range(len(h)):
        seen, stack, leaves = set(), [v], set()
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            if not h.children[x]:
                leaves.add(x)
            stack.extend(h.children[x])
        out.append(frozenset(leaves))
    return out


def test_criterion_3_interval_arithmetic(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad, pairs, kinds = 0, 0, []
    for i in range(24):
        dag = i % 2 == 1
        n_leaves = int(rng.integers(10, 101))
        text = (random_dag_text(rng, n_leaves, extra_edges=int(rng.integers(1, 8))) if dag
                else random_tree_text(rng, n_leaves))
        h = parse_hierarchy(text)
        assert len(h) <= 200
        kinds.append(h.is_dag)
        lab = label(h)
        sets = _leafsets(h)
        for x in range(len(h)):
            for y in range(len(h)):
                a, b = sets[x], sets[y]
                pairs += 1
                if set_cardinalities(lab.of(x), lab.of(y)) != (len(a), len(a & b), len(a | b)):
                    bad += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and len(kinds) >= 20 and any(kinds) and not all(kinds) and elapsed < 30
    verdict(3, ok, f"{len(kinds)} hierarchies ({sum(kinds)} DAGs), {pairs} node pairs, {bad} mismatches, "
                   f"time={elapsed:.1f}s")
    assert ok


def test_criterion_4_bound_soundness(verdict):
    t0 = time.perf_counter()
    violations, mismatches, n = 0, 0, 0
    for seed in range(12):
        data = random_dataset(500 + seed, n_objects=300, d=3, n_users=4, max_leaves=32,
                              dag=seed % 2 == 0, multi=seed % 3 == 0)
        for attrs in (None, [0], [1, 2]):
            ix = build_index(data, capacity=6, attrs=attrs)
            for f in ("jaccard", "overlap", "dice"):
                violations += len(audit_bounds(ix, f=f))
                mismatches += sorted(ind(ix, f=f)) != sorted(ind(ix, f=f, prune=False))
        n += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and mismatches == 0 and n >= 10 and elapsed < 120
    verdict(4, ok, f"{n} datasets x full/subspace x 3 similarities: {violations} bound violations, "
                   f"{mismatches} prune on/off mismatches, time={elapsed:.1f}s")
    assert ok


def test_criterion_5_performance_trend(verdict):
    data = gen_synthetic(SyntheticConfig(num_objects=100_000, num_attributes=4, group_size=8))
    prm = RunParams(repeats=3)
    reps = {a: run_experiment(data, a, prm) for a in ("ind", "bsl-bnl", "bsl-sfs", "bsl-bbs")}
    assert len({tuple(r.result) for r in reps.values()}) == 1
    best_bsl = min(reps[a].io_reads for a in ("bsl-bnl", "bsl-sfs", "bsl-bbs"))
    io_ratio = reps["ind"].io_reads / best_bsl
    time_ratio = reps["ind"].wall_time / reps["bsl-bnl"].wall_time
    slowest = max(r.wall_time for r in reps.values())
    ok = io_ratio <= 0.2 and time_ratio <= 1 / 3 and slowest < 300
    detail = " ".join(f"{a}: io={r.io_reads} time={r.wall_time:.2f}s" for a, r in reps.items())
    verdict(5, ok, f"io ratio={io_ratio:.3f} (need <=0.2), time ratio vs bnl={time_ratio:.2f} (need <=0.33); "
                   f"{detail}")
    assert io_ratio <= 0.2
    assert time_ratio <= 1 / 3


def test_criterion_6_subset_laws(verdict):
    bad = []
    for seed, data, table in _instances():
        cm = set(bsl(table, inner="sfs"))
        ix = build_index(data, capacity=8)
        prev = set()
        for p in PS:
            cur = set(p_ind(ix, p)[1])
            if not (prev <= cur <= cm) or set(p_bsl(table, p, inner="sfs")[1]) != cur:
                bad.append((seed, p))
            prev = cur
        if prev != cm:
            bad.append((seed, 100))
    ok = not bad
    verdict(6, ok, f"200 instances x p in 10..100: {len(bad)} violations {bad[:5]}")
    assert ok


def test_criterion_7_ranking_axioms(verdict):
    t0 = time.perf_counter()
    names = ["majority", "anonymity", "irrelevant_alternatives", "clone_independence", "monotonicity",
             "participation", "resolvability"]
    reports = axiom_suite(trials=1000, seed=0, names=names)
    elapsed = time.perf_counter() - t0
    ok = all(r.passed and r.trials >= 1000 for r in reports) and elapsed < 180
    verdict(7, ok, "; ".join(r.line() for r in reports) + f"; time={elapsed:.1f}s")
    assert ok


def test_criterion_8_metrics_and_report(verdict):
    t0 = time.perf_counter()
    a, b = [f"x{i}" for i in range(10)], [f"y{i}" for i in range(10)]
    same = (precision_at_k(a, a, 10), spearman_footrule(a, a, 10))
    disjoint = (precision_at_k(a, b, 10), spearman_footrule(a, b, 10))
    data = open_dataset("restaurants_mini")
    truth = read_ground_truth((bundled("restaurants_mini") / "ground_truth.txt").read_text())
    ks, sizes = (1, 5, 10), [2, 4, 8, 12]
    text = write_reports(evaluate(data, truth, ks=ks, group_sizes=sizes), "csv", "gcp-eval", EVAL_FIELDS)
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    methods = {r["strategy"] for r in rows}
    cells = {(r["strategy"], r["group_size"], r["k"]) for r in rows}
    complete = (len(methods) == 10 and len(cells) == len(rows) == 10 * len(ks) * len(sizes)
                and all(r[f] != "" for r in rows for f in EVAL_FIELDS))
    elapsed = time.perf_counter() - t0
    ok = same == (1.0, 0.0) and disjoint == (0.0, 1.0) and complete and elapsed < 30
    verdict(8, ok, f"identical={same} disjoint={disjoint} report rows={len(rows)} methods={len(methods)} "
                   f"complete={complete} time={elapsed:.1f}s")
    assert ok
