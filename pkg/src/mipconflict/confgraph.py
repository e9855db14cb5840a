"""Conflict graph analysis over the bound journal.

A conflict constraint stores a set of bounds whose conjunction is infeasible;
every feasible solution must violate at least one of them.  Constraints are
derived by resolving the infeasibility reason backwards through the journal
until a cut separating the branching decisions from the sink is reached.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .config import INF, TOL
from .model import LinearRow
from .propagate import BoundChange, BoundJournal, Reason

FUIP = "1-FUIP"
ALL_DECISIONS = "all-decisions"

LITERAL_FRACTION = 0.1
MIN_LITERAL_LIMIT = 10

_ids = itertools.count(1)


def next_id() -> int:
    return next(_ids)


@dataclass(eq=False)
class ConflictConstraint:
    """Bound disjunction: at least one stored bound must be violated."""

    literals: tuple[tuple[int, str, float], ...]
    origin: str = "propagation-conflict"
    stamp: float = INF
    id: int = field(default_factory=next_id)
    age: int = 0

    kind = "conflict"

    @property
    def incumbent_stamp(self) -> float | None:
        return None if math.isinf(self.stamp) else self.stamp

    @cached_property
    def _arrays(self):
        vars_ = np.array([v for v, _, _ in self.literals], dtype=np.int64)
        upper = np.array([d == "upper" for _, d, _ in self.literals], dtype=np.uint8)
        vals = np.array([b for _, _, b in self.literals], dtype=float)
        return vars_, upper, vals

    def arrays(self):
        return self._arrays

    def support(self) -> np.ndarray:
        return self._arrays[0]

    def __len__(self) -> int:
        return len(self.literals)

    def disjunction(self, names=None) -> str:
        parts = []
        for v, d, b in self.literals:
            name = names[v] if names else f"x{v + 1}"
            parts.append(f"{name} {'>' if d == 'upper' else '<'} {b:g}")
        return " or ".join(parts)

    def holds_in(self, lb, ub, tol: float = TOL.feasibility) -> bool:
        """All stored bounds hold in the box, i.e. the box is ruled out."""
        vars_, upper, vals = self._arrays
        return bool(np.all(np.where(upper, ub[vars_] <= vals + tol, lb[vars_] >= vals - tol)))

    def satisfied_by(self, x, tol: float = TOL.feasibility) -> np.ndarray | bool:
        """Whether point(s) ``x`` violate at least one stored bound."""
        vars_, upper, vals = self._arrays
        x = np.asarray(x)
        xv = x[..., vars_]
        viol = np.where(upper.astype(bool), xv > vals + tol, xv < vals - tol)
        return np.any(viol, axis=-1)


@dataclass
class InitialReason:
    positions: frozenset[int]
    stamp: float = INF


@dataclass
class ConflictResult:
    constraints: list[ConflictConstraint]
    global_infeasible: bool = False
    stamp: float = INF
    discarded: int = 0


def literal_limit(n: int) -> int:
    return max(MIN_LITERAL_LIMIT, int(LITERAL_FRACTION * n))


Lookup = Callable[[Reason], object]


def antecedents(journal: BoundJournal, change: BoundChange, lookup: Lookup) -> list[tuple[int, float]]:
    """Bound changes that implied ``change`` as ``(position, stamp)``; -1 means global."""
    reason = change.reason
    if reason.kind == "branch":
        return []
    cons = lookup(reason)
    out = []
    if reason.kind in ("row", "proof"):
        row = cons if isinstance(cons, LinearRow) else cons.row
        for j, a in zip(row.indices, row.values):
            j = int(j)
            if j == change.var:
                continue
            lower = a < 0
            pos = journal.responsible(j, lower, before=change.pos)
            out.append((pos, journal.bound_stamp(pos, j, lower)))
    elif reason.kind == "conflict":
        for j, d, v in cons.literals:
            if j == change.var:
                continue
            lower = d == "lower"
            pos = journal.earliest(j, lower, v, before=change.pos)
            out.append((pos, journal.bound_stamp(pos, j, lower)))
    else:
        raise ValueError(f"unknown reason kind {reason.kind!r}")
    return out


def sink_reason(journal: BoundJournal, culprit: Reason, lookup: Lookup) -> InitialReason:
    """Initial reason for an infeasibility detected by propagating ``culprit``."""
    cons = lookup(culprit)
    stamp = getattr(cons, "stamp", INF)
    positions = set()
    if culprit.kind in ("row", "proof"):
        row = cons if isinstance(cons, LinearRow) else cons.row
        for j, a in zip(row.indices, row.values):
            j = int(j)
            lower = a < 0
            pos = journal.responsible(j, lower)
            stamp = min(stamp, journal.bound_stamp(pos, j, lower))
            if pos >= 0:
                positions.add(pos)
    else:
        for j, d, v in cons.literals:
            lower = d == "lower"
            pos = journal.earliest(j, lower, v)
            stamp = min(stamp, journal.bound_stamp(pos, j, lower))
            if pos >= 0:
                positions.add(pos)
    return InitialReason(frozenset(positions), stamp)


def analyze_conflict(
    journal: BoundJournal,
    reason: InitialReason | Iterable[int],
    scheme: str = FUIP,
    lookup: Lookup | None = None,
    origin: str = "propagation-conflict",
    max_literals: int | None = None,
) -> ConflictResult:
    """Derive a conflict constraint from an infeasibility reason."""
    if not isinstance(reason, InitialReason):
        reason = InitialReason(frozenset(reason))
    if scheme not in (FUIP, ALL_DECISIONS):
        raise ValueError(f"unknown scheme {scheme!r}")
    changes = journal.changes
    stamp = reason.stamp
    members: set[int] = set()
    for p in reason.positions:
        if p < 0 or p >= len(changes):
            raise IndexError(f"reason position {p} not in journal")
        ch = changes[p]
        if ch.depth < 0:
            raise ValueError("bound change below depth 0")
        if ch.depth == 0:
            stamp = min(stamp, ch.stamp)
        else:
            members.add(p)

    def resolve(p: int):
        nonlocal stamp
        ch = changes[p]
        members.discard(p)
        stamp = min(stamp, ch.stamp)
        for q, s in antecedents(journal, ch, lookup):
            if q < 0:
                stamp = min(stamp, s)
            elif changes[q].depth == 0:
                stamp = min(stamp, changes[q].stamp)
            else:
                members.add(q)

    if members and scheme == FUIP:
        deepest = max(changes[p].depth for p in members)
        while True:
            current = [p for p in members if changes[p].depth == deepest]
            if len(current) <= 1:
                break
            p = max(current)
            if changes[p].reason.kind == "branch":
                break
            resolve(p)
    elif members:
        while True:
            implied = [p for p in members if changes[p].reason.kind != "branch"]
            if not implied:
                break
            resolve(max(implied))

    if not members:
        return ConflictResult([], global_infeasible=True, stamp=stamp)

    tightest: dict[tuple[int, bool], float] = {}
    for p in members:
        ch = changes[p]
        key = (ch.var, ch.lower)
        if key not in tightest:
            tightest[key] = ch.value
        elif ch.lower:
            tightest[key] = max(tightest[key], ch.value)
        else:
            tightest[key] = min(tightest[key], ch.value)
    literals = tuple(
        (var, "lower" if lower else "upper", value)
        for (var, lower), value in sorted(tightest.items())
    )
    limit = literal_limit(journal.n) if max_literals is None else max_literals
    if len(literals) > limit:
        return ConflictResult([], stamp=stamp, discarded=1)
    return ConflictResult([ConflictConstraint(literals, origin=origin, stamp=stamp)], stamp=stamp)
