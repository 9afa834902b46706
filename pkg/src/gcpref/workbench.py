"""Experiment harness: run any algorithm with counters, sweep parameters,
evaluate rankings against a reference list, and write versioned reports.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace
from importlib.resources import files
from pathlib import Path

import numpy as np

from .dominance import STANDARD, Counters
from .model import DataError, Dataset, degree_table, load_dataset
from .ranking import Strategy, StrategySpec, natural_key, precision_at_k, rank_cm, spearman_footrule, strategy_rank
from .skyline import PageModel, bsl, p_bsl
from .spatial import build_index, ind, p_ind
from .synthetic import SyntheticConfig, gen_synthetic

__all__ = [
    "DATA_ENV",
    "ALGORITHMS",
    "RunReport",
    "RunParams",
    "data_dir",
    "bundled",
    "open_dataset",
    "run_experiment",
    "sweep",
    "parse_sweep",
    "evaluate",
    "read_ground_truth",
    "format_ground_truth",
    "write_reports",
    "REPORT_FIELDS",
    "EVAL_FIELDS",
]

DATA_ENV = "GCPREF_DATA"
REPORT_FORMAT = "gcp-report"
EVAL_FORMAT = "gcp-eval"
RANKING_HEADER = "# gcp-ranking v1"

ALGORITHMS = (
    ["bsl-bnl", "bsl-sfs", "bsl-bbs", "ind", "p-bsl-bnl", "p-bsl-sfs", "p-bsl-bbs", "p-ind", "rank-cm"]
    + [f"strategy:{s.value}" for s in Strategy]
)


def data_dir() -> Path | None:
    """Default data directory from the environment, if set."""
    v = os.environ.get(DATA_ENV)
    return Path(v) if v else None


def bundled(name: str) -> Path:
    """Path of a fixture shipped with the package (``running_example``, ``restaurants_mini``)."""
    p = files("gcpref") / "data" / name
    if not p.is_dir():
        raise FileNotFoundError(f"no bundled dataset {name!r}")
    return Path(str(p))


def open_dataset(where) -> Dataset:
    """Load a dataset directory; bare names are tried under the default
    data directory and then among the bundled fixtures."""
    p = Path(where)
    if not p.is_dir():
        base = data_dir()
        if base is not None and (base / p).is_dir():
            p = base / p
        else:
            try:
                p = bundled(str(where))
            except FileNotFoundError:
                raise DataError(f"{where}: no such dataset directory") from None
    return load_dataset(p)


@dataclass(frozen=True)
class RunParams:
    p: float = 60
    f: str = "jaccard"
    capacity: int = 64
    window: int = 10_000
    records_per_page: int = 100
    mode: str = STANDARD
    multi: str = "max"
    index_method: str = "str"
    index_attrs: tuple | None = None
    threshold: float = 0.5
    repeats: int = 1

    def echo(self) -> dict:
        d = asdict(self)
        d["index_attrs"] = None if self.index_attrs is None else list(self.index_attrs)
        return d


@dataclass
class RunReport:
    algorithm: str
    io_reads: int
    dominance_checks: int
    wall_time: float
    result_size: int
    config: dict = field(default_factory=dict)
    seed: int | None = None
    result: list = field(default_factory=list)
    secondary: list = field(default_factory=list)

    def row(self) -> dict:
        out = {
            "algorithm": self.algorithm,
            "io_reads": self.io_reads,
            "dominance_checks": self.dominance_checks,
            "wall_time": round(self.wall_time, 6),
            "result_size": self.result_size,
            "seed": "" if self.seed is None else self.seed,
        }
        for k, v in self.config.items():
            out[k] = json.dumps(v) if isinstance(v, (list, dict)) else v
        return out


REPORT_FIELDS = ["algorithm", "io_reads", "dominance_checks", "wall_time", "result_size", "seed"]


def _once(data: Dataset, algorithm: str, prm: RunParams, index):
    counters = Counters()
    pages = PageModel(prm.records_per_page)
    second: list = []
    t0 = time.perf_counter()
    if algorithm.startswith("bsl-"):
        res = bsl(data, inner=algorithm[4:], f=prm.f, counters=counters, pages=pages, window=prm.window,
                  capacity=prm.capacity, mode=prm.mode, multi=prm.multi)
    elif algorithm == "ind":
        res = ind(index, f=prm.f, counters=counters, mode=prm.mode, multi=prm.multi)
    elif algorithm.startswith("p-bsl-"):
        cm, res = p_bsl(data, prm.p, inner=algorithm[6:], f=prm.f, counters=counters, pages=pages,
                        window=prm.window, capacity=prm.capacity, mode=prm.mode, multi=prm.multi)
        second = cm
    elif algorithm == "p-ind":
        cm, res = p_ind(index, prm.p, f=prm.f, counters=counters, mode=prm.mode, multi=prm.multi)
        second = cm
    elif algorithm == "rank-cm":
        table = degree_table(data, f=prm.f, multi=prm.multi)
        rr = rank_cm(table, counters=counters, mode=prm.mode)
        res = [(o, r) for r, ids in rr.tiers for o in ids]
    elif algorithm.startswith("strategy:"):
        table = degree_table(data, f=prm.f, multi=prm.multi)
        res = strategy_rank(table, StrategySpec(algorithm.split(":", 1)[1], prm.threshold))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    return res, second, counters, time.perf_counter() - t0


def run_experiment(data: Dataset, algorithm: str, params: RunParams | None = None, seed=None,
                   index=None) -> RunReport:
    """Run ``algorithm`` on ``data`` ``params.repeats`` times.

    Counters come from the first run (they are deterministic); wall time is
    the mean over runs. Index-based algorithms reuse ``index`` or build one
    first; building is not part of the timed run.
    """
    prm = params or RunParams()
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    if not data.users:
        raise DataError("dataset has no users")
    if algorithm in ("ind", "p-ind") and index is None:
        index = build_index(data, prm.capacity, prm.index_attrs, prm.index_method)
    times = []
    first = None
    for _ in range(max(1, prm.repeats)):
        res, second, counters, dt = _once(data, algorithm, prm, index)
        times.append(dt)
        if first is None:
            first = (res, second, counters)
    res, second, counters = first
    ids = [o.object_id for o in data.objects]
    if algorithm in ("rank-cm",) or algorithm.startswith("strategy:"):
        result = res
    else:
        result = sorted((ids[i] for i in res), key=natural_key)
    size = len(res)
    if algorithm == "rank-cm":
        size = sum(1 for _, r in res if r <= len(data.users))
    return RunReport(algorithm, counters.io_reads, counters.dominance_checks, float(np.mean(times)), size,
                     prm.echo(), seed, result, sorted((ids[i] for i in second), key=natural_key))


# --------------------------------------------------------------------------
# sweeps

_SWEEP_KEYS = {
    "objects": "num_objects",
    "attributes": "num_attributes",
    "users": "group_size",
    "height": "height",
    "object_level": "object_level",
    "user_level": "user_level",
}


def parse_sweep(text: str) -> tuple[str, list[int]]:
    """``users=2..32`` (doubling), ``users=2,4,8`` or ``objects=1000:5000:1000``."""
    if "=" not in text:
        raise ValueError(f"bad sweep {text!r}; expected name=values")
    name, spec = (s.strip() for s in text.split("=", 1))
    name = _SWEEP_KEYS.get(name, name)
    if name not in SyntheticConfig.__dataclass_fields__ or name == "seed":
        raise ValueError(f"cannot sweep {name!r}; expected one of {', '.join(_SWEEP_KEYS)}")
    if ".." in spec:
        lo, hi = (int(x) for x in spec.split(".."))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad range {spec!r}")
        vals = []
        v = lo
        while v <= hi:
            vals.append(v)
            v *= 2
    elif ":" in spec:
        lo, hi, step = (int(x) for x in spec.split(":"))
        vals = list(range(lo, hi + 1, step))
    else:
        vals = [int(x) for x in spec.split(",") if x.strip()]
    if not vals:
        raise ValueError(f"empty sweep {text!r}")
    return name, vals


def sweep(base: SyntheticConfig, name: str, values, algorithms, params: RunParams | None = None,
          progress=None) -> list[RunReport]:
    """One report per (value, algorithm) on freshly generated synthetic data."""
    prm = params or RunParams()
    out = []
    for v in values:
        cfg = replace(base, **{name: v})
        data = gen_synthetic(cfg)
        index = None
        if any(a in ("ind", "p-ind") for a in algorithms):
            index = build_index(data, prm.capacity, prm.index_attrs, prm.index_method)
        for a in algorithms:
            rep = run_experiment(data, a, prm, seed=cfg.seed, index=index)
            rep.config = {**cfg.as_dict(), **rep.config}
            out.append(rep)
            if progress is not None:
                progress(rep)
    return out


# --------------------------------------------------------------------------
# evaluation against a reference ranking


def read_ground_truth(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def format_ground_truth(ids) -> str:
    return RANKING_HEADER + "\n" + "".join(f"{i}\n" for i in ids)


EVAL_FIELDS = ["strategy", "group_size", "k", "precision", "footrule"]


def evaluate(data: Dataset, truth, ks=(5, 10), group_sizes=None, n_groups=20, seed=0,
             params: RunParams | None = None) -> list[dict]:
    """Mean precision@k and footrule of RANK-CM and every strategy.

    Groups of each size are drawn from the dataset's users without
    replacement; a group as large as the user list is used once.
    """
    prm = params or RunParams()
    truth = list(truth)
    m = len(data.users)
    if m == 0:
        raise DataError("dataset has no users")
    group_sizes = [m] if group_sizes is None else [g for g in group_sizes if 1 <= g <= m]
    rng = np.random.default_rng(seed)
    full = degree_table(data, f=prm.f, multi=prm.multi)
    methods = ["rank-cm"] + [s.name for s in Strategy]
    rows = []
    for g in group_sizes:
        groups = [np.arange(m)] if g == m else [np.sort(rng.choice(m, size=g, replace=False)) for _ in range(n_groups)]
        acc = {(name, k): [] for name in methods for k in ks}
        for grp in groups:
            table = full.subset_users(grp)
            lists = {"rank-cm": rank_cm(table, mode=prm.mode).ordered()}
            for s in Strategy:
                lists[s.name] = strategy_rank(table, StrategySpec(s, prm.threshold))
            for name, lst in lists.items():
                for k in ks:
                    acc[name, k].append((precision_at_k(lst, truth, k), spearman_footrule(lst, truth, k)))
        for name in methods:
            for k in ks:
                vals = np.array(acc[name, k])
                rows.append({"strategy": name, "group_size": g, "k": k,
                             "precision": round(float(vals[:, 0].mean()), 6),
                             "footrule": round(float(vals[:, 1].mean()), 6)})
    return rows


# --------------------------------------------------------------------------
# report files


def write_reports(rows: list[dict], fmt: str = "csv", kind: str = REPORT_FORMAT, fields=None) -> str:
    """Rows as CSV (after a ``# <kind> v1`` line) or JSON lines (after a header object)."""
    if fmt not in ("csv", "jsonlines"):
        raise ValueError(f"unknown report format {fmt!r}; expected csv or jsonlines")
    if fields is None:
        fields = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# {kind} v1\n")
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in fields})
    else:
        buf.write(json.dumps({"format": kind, "version": 1, "fields": fields}) + "\n")
        for r in rows:
            buf.write(json.dumps({k: r.get(k) for k in fields}) + "\n")
    return buf.getvalue()
