"""Instance generators and benchmark aggregation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import MipModel, build_model, read_mps
from .search import Settings, SolveResult, normalize_mode, solve

CSV_COLUMNS = (
    "instance", "setting", "seed", "status", "nodes", "time_s",
    "conflicts_analyzed", "conflict_constraints", "proof_constraints",
    "conflict_deductions", "proof_deductions", "pool_evictions", "incumbent_deletions",
)
FAMILIES = ("markshare-like", "bin-packing-infeasible", "random-setcover")
SIZE_RANGES = {
    "markshare-like": (4, 60),
    "bin-packing-infeasible": (3, 12),
    "random-setcover": (3, 200),
}
NODE_SHIFT = 100.0
TIME_SHIFT = 10.0
MIN_NODES = 100
MIN_ANALYZED = 100


def shifted_geomean(values: Iterable[float], shift: float) -> float:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("shifted geometric mean of an empty sequence")
    if shift <= 0:
        raise ValueError("shift must be positive")
    if np.any(v < 0):
        raise ValueError("values must be nonnegative")
    return float(np.exp(np.mean(np.log(v + shift))) - shift)


# ---------------------------------------------------------------------------
# generators


def generate_instance(family: str, size: int, seed: int) -> MipModel:
    """Synthetic stand-ins for infeasibility-heavy benchmark families.

    Deterministic in ``(family, size, seed)``. markshare-like: planted 0/1
    subset-sum equalities; bin-packing-infeasible: ``size`` items that each
    fill more than half a bin, packed into ``size - 1`` bins; random-setcover:
    a square covering matrix of density 0.3.
    """
    lo, hi = SIZE_RANGES.get(family, (None, None))
    if lo is None:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    if not lo <= size <= hi:
        raise ValueError(f"size {size} outside [{lo}, {hi}] for {family}")
    rng = np.random.default_rng([seed, size, FAMILIES.index(family)])
    name = f"{family}-{size}-{seed}"
    if family == "markshare-like":
        return _markshare(rng, size, name)
    if family == "bin-packing-infeasible":
        return _bin_packing(rng, size, name)
    return _setcover(rng, size, name)


def _markshare(rng, k, name):
    m = max(2, k // 6)
    A = rng.integers(0, 100, size=(m, k))
    planted = rng.random(k) < 0.5
    rhs = A @ planted
    c = rng.integers(-10, 11, size=k)
    rows = [(A[i].astype(float), "E", float(rhs[i])) for i in range(m)]
    return build_model(c.astype(float), rows, np.zeros(k), np.ones(k), [True] * k, name=name)


def _bin_packing(rng, k, name):
    bins = k - 1
    cap = 2 * int(rng.integers(5, 50)) + 1
    w = (cap + 1) // 2 + rng.integers(0, 2, size=k)
    n = k * bins

    def col(i, j):
        return i * bins + j

    rows = []
    for i in range(k):
        a = np.zeros(n)
        a[[col(i, j) for j in range(bins)]] = 1.0
        rows.append((a, "E", 1.0))
    for j in range(bins):
        a = np.zeros(n)
        for i in range(k):
            a[col(i, j)] = w[i]
        rows.append((a, "L", float(cap)))
    c = rng.integers(1, 10, size=n).astype(float)
    return build_model(c, rows, np.zeros(n), np.ones(n), [True] * n, name=name)


def _setcover(rng, k, name):
    m = k
    A = (rng.random((m, k)) < 0.3).astype(float)
    for i in np.flatnonzero(A.sum(axis=1) == 0):
        A[i, rng.integers(k)] = 1.0
    c = rng.integers(1, 11, size=k).astype(float)
    rows = [(A[i], "G", 1.0) for i in range(m)]
    return build_model(c, rows, np.zeros(k), np.ones(k), [True] * k, name=name)


# ---------------------------------------------------------------------------
# records


@dataclass
class RunRecord:
    instance: str
    setting: str
    seed: int
    status: str
    nodes: int
    time_s: float
    conflicts_analyzed: int = 0
    conflict_constraints: int = 0
    proof_constraints: int = 0
    conflict_deductions: int = 0
    proof_deductions: int = 0
    pool_evictions: int = 0
    incumbent_deletions: int = 0

    @classmethod
    def from_result(cls, instance: str, setting: str, seed: int, res: SolveResult) -> "RunRecord":
        st = res.stats
        return cls(instance, setting, seed, res.status, res.nodes, res.time,
                   st.conflicts_analyzed, st.conflict_constraints, st.proof_constraints,
                   st.conflict_deductions, st.proof_deductions, st.pool_evictions,
                   st.incumbent_deletions)

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        ints = set(CSV_COLUMNS) - {"instance", "setting", "status", "time_s"}
        kw = {k: (int(row[k]) if k in ints else row[k]) for k in CSV_COLUMNS}
        kw["time_s"] = float(row["time_s"])
        return cls(**kw)

    def row(self) -> dict:
        d = asdict(self)
        d["time_s"] = f"{self.time_s:.6f}"
        return d


def write_records(records: Sequence[RunRecord], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())


def read_records(fh) -> list[RunRecord]:
    reader = csv.DictReader(fh)
    missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"CSV lacks columns: {', '.join(sorted(missing))}")
    return [RunRecord.from_row(row) for row in reader]


def run_bench(instances: Sequence[tuple[str, MipModel]], modes: Sequence[str], seeds=(0,),
              **settings) -> list[RunRecord]:
    records = []
    for name, model in instances:
        for mode in modes:
            for seed in seeds:
                res = solve(model, Settings(mode=mode, seed=seed, **settings))
                records.append(RunRecord.from_result(name, _label(mode), seed, res))
    return records


def load_instances(directory: str | Path) -> list[tuple[str, MipModel]]:
    paths = sorted(Path(directory).glob("*.mps"))
    return [(p.stem, read_mps(p)) for p in paths]


def _label(mode: str) -> str:
    return normalize_mode(mode).replace("+", "-")


# ---------------------------------------------------------------------------
# summary


@dataclass
class SummaryRow:
    setting: str
    solved: int
    nodes: float
    time: float
    n_q: float
    t_q: float


def select_instances(records: Sequence[RunRecord], min_nodes: int = MIN_NODES,
                     min_analyzed: int = MIN_ANALYZED) -> list[str]:
    """Instances where every setting needs ``min_nodes`` nodes, some setting
    finishes and some setting analyzes more than ``min_analyzed`` infeasibilities."""
    by_inst: dict[str, list[RunRecord]] = {}
    for r in records:
        by_inst.setdefault(r.instance, []).append(r)
    keep = []
    for inst, rs in by_inst.items():
        if all(r.nodes >= min_nodes for r in rs) \
                and any(r.status != "limit" for r in rs) \
                and any(r.conflicts_analyzed > min_analyzed for r in rs):
            keep.append(inst)
    return sorted(keep)


def summarize(records: Sequence[RunRecord], base: str = "conflict", filtered: bool = True,
              min_nodes: int = MIN_NODES, min_analyzed: int = MIN_ANALYZED) -> list[SummaryRow]:
    base = _label(base)
    settings = sorted({r.setting for r in records})
    if base not in settings:
        raise ValueError(f"base setting {base!r} absent from records")
    keep = set(select_instances(records, min_nodes, min_analyzed)) if filtered \
        else {r.instance for r in records}
    table = {}
    for s in settings:
        rs = [r for r in records if r.setting == s and r.instance in keep]
        if rs:
            table[s] = (
                sum(r.status != "limit" for r in rs),
                shifted_geomean([r.nodes for r in rs], NODE_SHIFT),
                shifted_geomean([r.time_s for r in rs], TIME_SHIFT),
            )
        else:
            table[s] = (0, math.nan, math.nan)
    bn, bt = table[base][1], table[base][2]
    return [SummaryRow(s, v[0], v[1], v[2], _ratio(v[1], bn), _ratio(v[2], bt))
            for s, v in table.items()]


def _ratio(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return a / b if b else (1.0 if a == b else math.inf)


def format_summary(rows: Sequence[SummaryRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["setting", "solved", "nodes", "time_s", "n_Q", "t_Q"])
    for r in rows:
        w.writerow([r.setting, r.solved, f"{r.nodes:.3f}", f"{r.time:.3f}", f"{r.n_q:.3f}", f"{r.t_q:.3f}"])
    return out.getvalue()
