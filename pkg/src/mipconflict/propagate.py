"""Activity-based domain propagation with a journal of bound changes.

Every tightening is recorded as a :class:`BoundChange` with the reason that
implied it; the journal is the implication graph consumed by conflict
analysis.

Bounds derived from constraints that only hold for solutions better than an
incumbent carry a *stamp*: the incumbent value they depend on (``inf`` when
the change is valid for every feasible solution).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .config import INF, TOL
from .model import LinearRow, LocalBounds

ROUND_CAP = 50


class Reason(NamedTuple):
    kind: str  # branch | row | conflict | proof
    ident: int = -1


BRANCHING = Reason("branch")


@dataclass(slots=True)
class BoundChange:
    var: int
    lower: bool
    value: float
    old: float
    depth: int
    reason: Reason
    pos: int = -1
    prev: int = -1
    stamp: float = INF

    @property
    def direction(self) -> str:
        return "lower" if self.lower else "upper"


class BoundJournal:
    """Ordered record of bound changes on top of a set of global bounds."""

    def __init__(self, lb, ub, is_int=None, lb_stamp=None, ub_stamp=None):
        self.global_lb = np.array(lb, dtype=float)
        self.global_ub = np.array(ub, dtype=float)
        n = self.global_lb.shape[0]
        self.lb = self.global_lb.copy()
        self.ub = self.global_ub.copy()
        self.is_int = np.zeros(n, np.uint8) if is_int is None else np.asarray(is_int).astype(np.uint8)
        self.global_lb_stamp = np.full(n, INF) if lb_stamp is None else np.array(lb_stamp, dtype=float)
        self.global_ub_stamp = np.full(n, INF) if ub_stamp is None else np.array(ub_stamp, dtype=float)
        self.lb_stamp = self.global_lb_stamp.copy()
        self.ub_stamp = self.global_ub_stamp.copy()
        self.last_lb = np.full(n, -1, dtype=np.int64)
        self.last_ub = np.full(n, -1, dtype=np.int64)
        self.changes: list[BoundChange] = []
        self.depth = 0

    @property
    def n(self) -> int:
        return self.lb.shape[0]

    @property
    def has_stamps(self) -> bool:
        return bool(np.isfinite(self.lb_stamp).any() or np.isfinite(self.ub_stamp).any())

    def bounds(self) -> LocalBounds:
        return LocalBounds(self.lb.copy(), self.ub.copy())

    def global_bounds(self) -> LocalBounds:
        return LocalBounds(self.global_lb.copy(), self.global_ub.copy())

    def infeasible(self, tol: float = TOL.feasibility) -> bool:
        return bool(np.any(self.lb > self.ub + tol))

    def tighten(self, var: int, lower: bool, value: float, reason: Reason,
                depth: int | None = None, stamp: float = INF) -> BoundChange | None:
        """Record ``x_var >= value`` (``lower``) or ``x_var <= value``; no-op unless tighter."""
        var = int(var)
        old = self.lb[var] if lower else self.ub[var]
        if (lower and not value > old) or (not lower and not value < old):
            return None
        last = self.last_lb if lower else self.last_ub
        change = BoundChange(var, lower, float(value), float(old),
                             self.depth if depth is None else depth, reason,
                             len(self.changes), int(last[var]), stamp)
        self.changes.append(change)
        last[var] = change.pos
        if lower:
            self.lb[var] = value
            self.lb_stamp[var] = stamp
        else:
            self.ub[var] = value
            self.ub_stamp[var] = stamp
        return change

    def replay(self, changes: Sequence[BoundChange]) -> bool:
        """Re-apply changes recorded elsewhere; False if the bounds cross."""
        for ch in changes:
            self.depth = max(self.depth, ch.depth)
            self.tighten(ch.var, ch.lower, ch.value, ch.reason, ch.depth, ch.stamp)
        return not self.infeasible()

    def rebuild(self) -> tuple[np.ndarray, np.ndarray]:
        """Current bounds recomputed from the global bounds and the change list."""
        lb, ub = self.global_lb.copy(), self.global_ub.copy()
        for ch in self.changes:
            if ch.lower:
                lb[ch.var] = ch.value
            else:
                ub[ch.var] = ch.value
        return lb, ub

    def responsible(self, var: int, lower: bool, before: int | None = None) -> int:
        """Position of the change defining a bound just before ``before`` (-1: global)."""
        pos = int((self.last_lb if lower else self.last_ub)[var])
        if before is not None:
            while pos >= before:
                pos = self.changes[pos].prev
        return pos

    def earliest(self, var: int, lower: bool, value: float, before: int | None = None,
                 tol: float = TOL.feasibility) -> int:
        """Earliest position whose bound is at least as tight as ``value`` (-1: global)."""

        def reaches(v: float) -> bool:
            return v >= value - tol if lower else v <= value + tol

        glob = self.global_lb[var] if lower else self.global_ub[var]
        pos = self.responsible(var, lower, before)
        if pos < 0 or not reaches(self.changes[pos].value):
            if reaches(glob):
                return -1
            raise LookupError(f"no bound change on x{var} reaches {value}")
        while True:
            prev = self.changes[pos].prev
            if prev >= 0 and reaches(self.changes[prev].value):
                pos = prev
            elif prev < 0 and reaches(glob):
                return -1
            else:
                return pos

    def bound_stamp(self, pos: int, var: int, lower: bool) -> float:
        if pos >= 0:
            return self.changes[pos].stamp
        return float((self.global_lb_stamp if lower else self.global_ub_stamp)[var])


# ---------------------------------------------------------------------------
# single-constraint propagation


def maximal_activity(row, bounds) -> float:
    idx, vals = _row_arrays(row)
    return float(kernels.max_activity(idx, vals, _f(bounds.lb), _f(bounds.ub)))


def activity_residual(row, bounds, i: int) -> float:
    """Maximal activity of ``row`` over all variables except ``x_i``."""
    idx, vals = _row_arrays(row)
    hit = np.flatnonzero(idx == i)
    if hit.size == 0 or vals[hit[0]] == 0:
        raise ValueError(f"variable {i} has a zero coefficient in the row")
    keep = idx != i
    return float(kernels.max_activity(idx[keep], vals[keep], _f(bounds.lb), _f(bounds.ub)))


def contribution(row, bounds, i: int) -> float:
    idx, vals = _row_arrays(row)
    k = int(np.flatnonzero(idx == i)[0])
    a = vals[k]
    return float(a * bounds.ub[i] if a > 0 else a * bounds.lb[i])


@dataclass
class Outcome:
    status: str  # deduced | infeasible | noop
    changes: list[BoundChange] = field(default_factory=list)

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"

    @property
    def deduced(self) -> bool:
        return self.status == "deduced"


def propagate_row(row: LinearRow, journal: BoundJournal, reason: Reason = Reason("row"),
                  stamp: float = INF) -> Outcome:
    """Tighten bounds implied by ``row`` (``>=`` form) and journal them."""
    idx, vals = _row_arrays(row)
    status, _, out_vars, out_lower, out_vals = kernels.row_deductions(
        idx, vals, float(row.lhs), journal.lb, journal.ub, journal.is_int,
        TOL.feasibility, TOL.deduction, TOL.integrality,
    )
    if status < 0:
        return Outcome("infeasible")
    if status == 0:
        return Outcome("noop")
    if journal.has_stamps and idx.size:
        used = np.where(vals > 0, journal.ub_stamp[idx], journal.lb_stamp[idx])
        stamp = min(stamp, float(used.min()))
    changes = []
    for var, lower, value in zip(out_vars, out_lower, out_vals):
        ch = journal.tighten(var, lower, value, reason, stamp=stamp)
        if ch is not None:
            changes.append(ch)
    return Outcome("deduced" if changes else "noop", changes)


def propagate_conflict(constraint, journal: BoundJournal) -> Outcome:
    """Unit propagation of a bound disjunction."""
    vars_, upper, vals = constraint.arrays()
    status, k = kernels.conflict_state(vars_, upper, vals, journal.lb, journal.ub, TOL.feasibility)
    if status < 0:
        return Outcome("infeasible")
    if status == 0:
        return Outcome("noop")
    var = int(vars_[k])
    value = float(vals[k])
    stamp = getattr(constraint, "stamp", INF)
    if journal.has_stamps:
        for j, up in zip(vars_, upper):
            if j != var:
                stamp = min(stamp, float(journal.ub_stamp[j] if up else journal.lb_stamp[j]))
    reason = Reason("conflict", constraint.id)
    if upper[k]:
        # stored x <= v, so enforce x > v
        bound = math.floor(value + TOL.integrality) + 1.0 if journal.is_int[var] else value
        ch = journal.tighten(var, True, bound, reason, stamp=stamp)
    else:
        bound = math.ceil(value - TOL.integrality) - 1.0 if journal.is_int[var] else value
        ch = journal.tighten(var, False, bound, reason, stamp=stamp)
    if ch is None:
        return Outcome("noop")
    if journal.lb[var] > journal.ub[var] + TOL.feasibility:
        return Outcome("infeasible", [ch])
    return Outcome("deduced", [ch])


# ---------------------------------------------------------------------------
# fixpoint


@dataclass
class FixpointResult:
    infeasible: bool
    culprit: Reason | None = None
    rounds: int = 0
    deductions: int = 0
    considered: set = field(default_factory=set)
    deduced: set = field(default_factory=set)


def propagate_fixpoint(
    rows: Sequence[LinearRow],
    learned: Sequence = (),
    journal: BoundJournal | None = None,
    var_rows: Sequence[np.ndarray] | None = None,
    round_cap: int = ROUND_CAP,
) -> FixpointResult:
    """Round-robin propagation of model rows and learned constraints.

    ``learned`` holds proof constraints (``kind == "proof"``, propagated as
    rows) and conflict constraints (``kind == "conflict"``).  ``considered``
    and ``deduced`` in the result report learned constraint ids for aging.
    """
    res = FixpointResult(False)
    n = journal.n
    if var_rows is None:
        var_rows = _var_rows(rows, n)
    learned_vars = [c.support() for c in learned]
    start = len(journal.changes)
    dirty_rows: np.ndarray | None = None  # None: everything on the first round
    changed = np.ones(n, dtype=bool)
    for rnd in range(round_cap):
        res.rounds = rnd + 1
        mark = len(journal.changes)
        row_ids = range(len(rows)) if dirty_rows is None else dirty_rows
        for j in row_ids:
            out = propagate_row(rows[j], journal, Reason("row", int(j)))
            if out.infeasible:
                res.infeasible, res.culprit = True, Reason("row", int(j))
                res.deductions = len(journal.changes) - start
                return res
        for c, support in zip(learned, learned_vars):
            if dirty_rows is not None and not changed[support].any():
                continue
            res.considered.add(c.id)
            if c.kind == "proof":
                out = propagate_row(c.row, journal, Reason("proof", c.id), stamp=c.stamp)
            else:
                out = propagate_conflict(c, journal)
            if out.infeasible:
                res.deduced.add(c.id)
                res.infeasible, res.culprit = True, Reason(c.kind, c.id)
                res.deductions = len(journal.changes) - start
                return res
            if out.deduced:
                res.deduced.add(c.id)
        if len(journal.changes) == mark:
            break
        changed = np.zeros(n, dtype=bool)
        for ch in journal.changes[mark:]:
            changed[ch.var] = True
        touched = np.flatnonzero(changed)
        dirty_rows = np.unique(np.concatenate([var_rows[i] for i in touched])) if touched.size else np.zeros(0, np.int64)
    res.deductions = len(journal.changes) - start
    return res


def _var_rows(rows, n):
    lists = [[] for _ in range(n)]
    for j, r in enumerate(rows):
        for i in r.indices:
            lists[int(i)].append(j)
    return [np.array(v, dtype=np.int64) for v in lists]


def _row_arrays(row):
    if isinstance(row, LinearRow) or hasattr(row, "indices"):
        idx, vals = row.indices, row.values
    else:
        idx, vals = row[0], row[1]
    return np.ascontiguousarray(idx, dtype=np.int64), np.ascontiguousarray(vals, dtype=float)


def _f(a):
    return np.ascontiguousarray(a, dtype=float)
