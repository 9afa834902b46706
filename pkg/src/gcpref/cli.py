"""Command-line interface: ``gcpref <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .dominance import LITERAL, STANDARD, Counters, brute_force_cm, brute_force_pcm
from .hierarchy import HierarchyError
from .model import DataError, degree_table, load_dataset, save_dataset
from .ranking import rank_cm
from .skyline import bsl
from .spatial import ObjectIndex, audit_bounds, build_index, ind, p_ind, transform
from .synthetic import SyntheticConfig, gen_synthetic, random_dataset
from .workbench import (
    ALGORITHMS,
    EVAL_FIELDS,
    RunParams,
    bundled,
    data_dir,
    evaluate,
    parse_sweep,
    read_ground_truth,
    run_experiment,
    sweep,
    write_reports,
)

GMCO_ALGOS = ["ind", "bsl-bnl", "bsl-sfs", "bsl-bbs"]
PGMCO_ALGOS = ["p-ind", "p-bsl-bnl", "p-bsl-sfs", "p-bsl-bbs"]


class UsageError(Exception):
    pass


def _resolve(name) -> Path:
    p = Path(name)
    if p.is_dir():
        return p
    base = data_dir()
    if base is not None and (base / p).is_dir():
        return base / p
    try:
        return bundled(str(name))
    except FileNotFoundError:
        raise DataError(f"{name}: no such dataset directory") from None


def _dataset(args):
    if args.objects:
        hdir = args.hierarchies or Path(args.objects).parent
        return load_dataset(args.data and _resolve(args.data), objects=args.objects, users=args.users,
                            hierarchy_dir=hdir)
    if args.data is None:
        if data_dir() is None:
            raise UsageError("no input: give --data DIR (or a bundled name) or --objects/--users")
        return load_dataset(data_dir(), users=args.users, hierarchy_dir=args.hierarchies)
    return load_dataset(_resolve(args.data), users=args.users, hierarchy_dir=args.hierarchies)


def _params(args, **extra) -> RunParams:
    kw = {}
    for name in ("f", "capacity", "window", "mode", "multi", "repeats"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "index_attrs", None):
        kw["index_attrs"] = tuple(args.index_attrs)
    kw.update(extra)
    return RunParams(**kw)


def _load_index(args, data):
    if not getattr(args, "index", None):
        return None
    text = Path(args.index).read_text(encoding="utf-8")
    return ObjectIndex.from_dump(data, text, _attr_ids(data, args.index_attrs))


def _attr_ids(data, names):
    if not names:
        return None
    out = []
    for n in names:
        try:
            out.append(int(n) if str(n).isdigit() else data.attribute_index(n))
        except KeyError as e:
            raise UsageError(f"unknown attribute {n!r}") from e
    return tuple(out)


def _stats(rep, stream):
    print(f"# algorithm={rep.algorithm} io_reads={rep.io_reads} dominance_checks={rep.dominance_checks} "
          f"wall_time={rep.wall_time:.6f}", file=stream)


# --------------------------------------------------------------------------
# commands


def cmd_gen(args, out):
    cfg = SyntheticConfig(args.objects_n, args.attributes, args.users_n, args.height, args.object_level,
                          args.user_level, args.seed)
    data = gen_synthetic(cfg)
    save_dataset(data, args.out)
    print(f"wrote {len(data.objects)} objects, {len(data.users)} users, {data.d} hierarchies to {args.out}",
          file=sys.stderr)


def cmd_transform(args, out):
    data = _dataset(args)
    attrs = _attr_ids(data, args.index_attrs) or tuple(range(data.d))
    out.write("# gcp-rects v1\n")
    out.write("object_id\trect\t" + "\t".join(f"{data.attributes[k]}" for k in attrs) + "\n")
    for o in data.objects:
        for r, (lo, hi) in enumerate(transform(data, o, attrs)):
            cells = "\t".join(f"[{int(a)},{int(b)})" for a, b in zip(lo, hi))
            out.write(f"{o.object_id}\t{r}\t{cells}\n")


def cmd_index(args, out):
    data = _dataset(args)
    ix = build_index(data, args.capacity, _attr_ids(data, args.index_attrs), args.method)
    text = ix.dump()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(ix.tree.nodes)} nodes to {args.out}", file=sys.stderr)
    else:
        out.write(text)


def cmd_gmco(args, out):
    data = _dataset(args)
    rep = run_experiment(data, args.algo, _params(args), index=_load_index(args, data))
    for o in rep.result:
        out.write(f"{o}\n")
    if args.stats:
        _stats(rep, sys.stderr)


def cmd_pgmco(args, out):
    data = _dataset(args)
    rep = run_experiment(data, args.algo, _params(args, p=args.p), index=_load_index(args, data))
    for o in rep.result:
        out.write(f"{o}\n")
    if args.stats:
        _stats(rep, sys.stderr)


def cmd_rank(args, out):
    data = _dataset(args)
    table = degree_table(data, f=args.f, multi=args.multi)
    counters = Counters()
    rr = rank_cm(table, counters=counters, mode=args.mode)
    for r, ids in rr.tiers:
        out.write(f"{r}: {' '.join(ids)}\n")
    if args.stats:
        print(f"# dominance_checks={counters.dominance_checks}", file=sys.stderr)


def cmd_eval(args, out):
    data = _dataset(args)
    truth_path = Path(args.truth) if args.truth else None
    if truth_path is None:
        base = _resolve(args.data) if args.data else data_dir()
        if base is None or not (base / "ground_truth.txt").exists():
            raise UsageError("no reference ranking: give --truth FILE")
        truth_path = base / "ground_truth.txt"
    truth = read_ground_truth(truth_path.read_text(encoding="utf-8"))
    if not truth:
        raise DataError(f"{truth_path}:1: empty reference ranking")
    rows = evaluate(data, truth, ks=args.k, group_sizes=args.group_sizes, n_groups=args.groups, seed=args.seed,
                    params=_params(args))
    out.write(write_reports(rows, args.format, "gcp-eval", EVAL_FIELDS))


def _bench_config(args):
    cfg = SyntheticConfig()
    settings = {}
    if args.config:
        try:
            settings = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataError(f"{args.config}:{e.lineno}: {e.msg}") from e
    base = {k: v for k, v in settings.get("base", {}).items()}
    if args.objects_n is not None:
        base["num_objects"] = args.objects_n
    if args.seed is not None:
        base["seed"] = args.seed
    try:
        cfg = replace(cfg, **base)
    except TypeError as e:
        raise DataError(f"{args.config}: bad base setting ({e})") from e
    sweep_text = args.sweep or settings.get("sweep")
    algos = args.algos or settings.get("algorithms") or GMCO_ALGOS
    prm = RunParams(**settings.get("params", {}))
    if args.repeats is not None:
        prm = replace(prm, repeats=args.repeats)
    return cfg, sweep_text, algos, prm


def cmd_bench(args, out):
    cfg, sweep_text, algos, prm = _bench_config(args)
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}")
    if sweep_text:
        name, values = parse_sweep(sweep_text)
    else:
        name, values = "group_size", [cfg.group_size]

    def progress(rep):
        print(f"# {name}={rep.config[name]} {rep.algorithm}: io={rep.io_reads} checks={rep.dominance_checks} "
              f"time={rep.wall_time:.3f}s", file=sys.stderr)

    reps = sweep(cfg, name, values, algos, prm, progress=None if args.quiet else progress)
    out.write(write_reports([r.row() for r in reps], args.format, "gcp-report"))


def cmd_audit(args, out):
    failures = 0
    if args.data or args.objects:
        data = _dataset(args)
        for attrs in (None, (0,)):
            ix = build_index(data, args.capacity or 8, attrs)
            bad = audit_bounds(ix, f=args.f)
            failures += len(bad)
            out.write(f"bounds attrs={'all' if attrs is None else list(attrs)}: {len(bad)} violations\n")
        datasets = [("input", data)]
    else:
        datasets = []
    for seed in range(args.seeds):
        datasets.append((f"random:{seed}", random_dataset(seed, n_objects=40, d=1 + seed % 3, n_users=1 + seed % 4,
                                                           dag=seed % 3 == 0, multi=seed % 2 == 0)))
    for name, data in datasets:
        if len(data.objects) > args.max_objects or not data.users:
            out.write(f"{name}: skipped oracle cross-check ({len(data.objects)} objects)\n")
            continue
        table = degree_table(data, f=args.f)
        expect = brute_force_cm(table)
        got = {
            "ind": sorted(ind(build_index(data, 4), f=args.f)),
            "bsl-bnl": bsl(table, inner="bnl", window=8),
            "bsl-sfs": bsl(table, inner="sfs"),
            "bsl-bbs": bsl(table, inner="bbs", capacity=4),
        }
        mism = [k for k, v in got.items() if v != expect]
        ix = build_index(data, 4)
        p_ok = all(sorted(p_ind(ix, p, f=args.f)[1]) == brute_force_pcm(table, p, cm=expect) for p in (30, 60, 100))
        bad = audit_bounds(build_index(data, 3), f=args.f)
        failures += len(mism) + len(bad) + (not p_ok)
        status = "ok" if not (mism or bad) and p_ok else f"FAIL cm={mism} pcm={'ok' if p_ok else 'mismatch'} bounds={len(bad)}"
        out.write(f"{name}: {status}\n")
    out.write(f"audit: {'PASS' if failures == 0 else 'FAIL'}\n")
    return 0 if failures == 0 else 1


# --------------------------------------------------------------------------
# parser


def _input_args(p):
    g = p.add_argument_group("input")
    g.add_argument("--data", help="dataset directory or bundled fixture name (default: $GCPREF_DATA)")
    g.add_argument("--objects", help="objects CSV file")
    g.add_argument("--users", help="users CSV file")
    g.add_argument("--hierarchies", help="directory of *.hier files (default: the objects file's directory)")


def _algo_args(p):
    p.add_argument("--f", "--similarity", dest="f", default="jaccard", choices=["jaccard", "overlap", "dice"])
    p.add_argument("--mode", default=STANDARD, choices=[STANDARD, LITERAL])
    p.add_argument("--multi", default="max", choices=["max", "min", "avg"])


def _csv_list(conv=str):
    def parse(s):
        try:
            return [conv(x) for x in s.split(",") if x.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from e

    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcpref", description="Group preference queries over categorical hierarchies.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--objects", dest="objects_n", type=int, default=SyntheticConfig.num_objects)
    p.add_argument("--attributes", type=int, default=SyntheticConfig.num_attributes)
    p.add_argument("--users", dest="users_n", type=int, default=SyntheticConfig.group_size)
    p.add_argument("--height", type=int, default=SyntheticConfig.height)
    p.add_argument("--object-level", type=int, default=SyntheticConfig.object_level)
    p.add_argument("--user-level", type=int, default=SyntheticConfig.user_level)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("transform", help="print the interval rectangles of every object")
    _input_args(p)
    p.add_argument("--index-attrs", type=_csv_list())
    p.set_defaults(run=cmd_transform)

    p = sub.add_parser("index", help="build and dump the object index")
    _input_args(p)
    p.add_argument("--out")
    p.add_argument("--capacity", type=int, default=64)
    p.add_argument("--method", default="str", choices=["str", "rstar"])
    p.add_argument("--index-attrs", type=_csv_list())
    p.set_defaults(run=cmd_index)

    for name, algos, default, fn in (("gmco", GMCO_ALGOS, "ind", cmd_gmco), ("pgmco", PGMCO_ALGOS, "p-ind", cmd_pgmco)):
        p = sub.add_parser(name, help="collectively maximal objects" if name == "gmco"
                           else "p-collectively maximal objects")
        _input_args(p)
        _algo_args(p)
        p.add_argument("--algo", default=default, choices=algos)
        if name == "pgmco":
            p.add_argument("--p", type=float, required=True, help="percentage of users, in (0, 100]")
        p.add_argument("--index", help="index dump written by 'gcpref index'")
        p.add_argument("--index-attrs", type=_csv_list())
        p.add_argument("--capacity", type=int, default=64)
        p.add_argument("--window", type=int, default=10_000)
        p.add_argument("--stats", action="store_true", help="print counters to standard error")
        p.set_defaults(run=fn)

    p = sub.add_parser("rank", help="tiered ranking of the collectively maximal objects")
    _input_args(p)
    _algo_args(p)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(run=cmd_rank)

    p = sub.add_parser("eval", help="compare rankings with a reference list")
    _input_args(p)
    _algo_args(p)
    p.add_argument("--truth", help="reference ranking, one object id per line")
    p.add_argument("--k", type=_csv_list(int), default=[5, 10])
    p.add_argument("--group-sizes", type=_csv_list(int))
    p.add_argument("--groups", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="csv", choices=["csv", "jsonlines"])
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("bench", help="run algorithms over a synthetic parameter sweep")
    p.add_argument("--config", help="JSON file with 'base', 'sweep', 'algorithms', 'params'")
    p.add_argument("--sweep", help="e.g. users=2..32, objects=1000,2000")
    p.add_argument("--algos", type=_csv_list())
    p.add_argument("--objects", dest="objects_n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--format", default="csv", choices=["csv", "jsonlines"])
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("audit", help="bound audit and oracle cross-checks")
    _input_args(p)
    p.add_argument("--f", default="jaccard", choices=["jaccard", "overlap", "dice"])
    p.add_argument("--capacity", type=int)
    p.add_argument("--seeds", type=int, default=10, help="random instances to cross-check")
    p.add_argument("--max-objects", type=int, default=2000)
    p.set_defaults(run=cmd_audit)
    return ap


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        rc = args.run(args, out)
    except UsageError as e:
        print(f"gcpref {args.command}: {e}", file=sys.stderr)
        return 2
    except (DataError, HierarchyError, FileNotFoundError, ValueError) as e:
        print(f"gcpref {args.command}: error: {e}", file=sys.stderr)
        return 1
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
