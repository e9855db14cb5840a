"""LP-based branch-and-bound with infeasibility learning.

The run setting decides what is learned from infeasible nodes:

``none``           nothing
``conflict``       conflict-graph analysis of propagation and LP infeasibility
``dualray``        proof constraints from Farkas rays, propagated directly
``combined``       both of the above
``combined+pool``  both, stored in a :class:`~mipconflict.pool.ConflictPool`
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .confgraph import FUIP, ConflictConstraint, analyze_conflict, sink_reason
from .config import INF, TOL
from .dualproof import build_proof_constraint, initial_reason, relax_local_bounds
from .lp import solve_lp, stack_rows
from .model import LinearRow, MipModel, check_solution
from .pool import ConflictPool, LearnedStore, pool_capacity
from .propagate import BRANCHING, BoundChange, BoundJournal, Reason, propagate_fixpoint

log = logging.getLogger(__name__)

MODES = ("none", "conflict", "dualray", "combined", "combined+pool")
SOURCES = ("both", "prop-only", "lp-only")
NODE_SELECTIONS = ("dfs", "best-bound", "hybrid")
HYBRID_STREAK = 100


def normalize_mode(mode: str) -> str:
    mode = mode.strip().lower()
    if mode == "combined-pool":
        mode = "combined+pool"
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    return mode


@dataclass
class Settings:
    mode: str = "combined"
    conflict_source: str = "both"
    node_selection: str = "hybrid"
    time_limit: float = 60.0
    node_limit: int = 100_000
    scheme: str = FUIP
    seed: int = 0
    record_learned: bool = False
    hybrid_streak: int = HYBRID_STREAK

    def __post_init__(self):
        self.mode = normalize_mode(self.mode)
        if self.conflict_source not in SOURCES:
            raise ValueError(f"unknown conflict source {self.conflict_source!r}")
        if self.node_selection not in NODE_SELECTIONS:
            raise ValueError(f"unknown node selection {self.node_selection!r}")

    @property
    def conflict_graph(self) -> bool:
        return self.mode in ("conflict", "combined", "combined+pool")

    @property
    def dual_ray(self) -> bool:
        return self.mode in ("dualray", "combined", "combined+pool")

    @property
    def use_pool(self) -> bool:
        return self.mode == "combined+pool"

    @property
    def analyze_propagation(self) -> bool:
        return self.conflict_graph and self.conflict_source in ("both", "prop-only")

    @property
    def analyze_lp(self) -> bool:
        return self.conflict_graph and self.conflict_source in ("both", "lp-only")


@dataclass
class Node:
    id: int
    parent: int | None
    depth: int
    changes: tuple = ()
    lower_bound: float = -INF
    branching: BoundChange | None = None


@dataclass
class SearchStats:
    nodes: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    lp_stalls: int = 0
    infeasible_lps: int = 0
    propagation_infeasible: int = 0
    bound_prunes: int = 0
    conflicts_analyzed: int = 0
    conflict_constraints: int = 0
    proof_constraints: int = 0
    unit_conflicts: int = 0
    discarded_conflicts: int = 0
    birth_failures: int = 0
    conflict_deductions: int = 0
    proof_deductions: int = 0
    relaxation_events: int = 0
    reason_size_before: int = 0
    reason_size_after: int = 0
    pool_inserted: int = 0
    pool_evictions: int = 0
    age_deletions: int = 0
    incumbent_deletions: int = 0
    incumbents: int = 0

    @property
    def mean_reason_before(self) -> float:
        return self.reason_size_before / self.relaxation_events if self.relaxation_events else 0.0

    @property
    def mean_reason_after(self) -> float:
        return self.reason_size_after / self.relaxation_events if self.relaxation_events else 0.0

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["mean_reason_before"] = self.mean_reason_before
        out["mean_reason_after"] = self.mean_reason_after
        return out


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | limit | unbounded
    x: np.ndarray | None
    objective: float | None
    nodes: int
    time: float
    stats: SearchStats
    internal_objective: float | None = None
    learned: list = field(default_factory=list)
    complete: bool = True


# ---------------------------------------------------------------------------
# node selection


def select_node(open_nodes: list[Node], strategy: str, dfs_streak: int = 0,
                streak_limit: int = HYBRID_STREAK) -> Node:
    """Pick a node from a list (reference implementation of the selection rules)."""
    if not open_nodes:
        raise ValueError("no open nodes")
    if strategy == "dfs" or (strategy == "hybrid" and dfs_streak < streak_limit):
        return max(open_nodes, key=lambda nd: (nd.depth, nd.id))
    if strategy in ("best-bound", "hybrid"):
        return min(open_nodes, key=lambda nd: (nd.lower_bound, nd.id))
    raise ValueError(f"unknown strategy {strategy!r}")


class NodeSelector:
    """Open-node store with depth-first, best-bound and hybrid picking."""

    def __init__(self, strategy: str = "hybrid", streak_limit: int = HYBRID_STREAK):
        if strategy not in NODE_SELECTIONS:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.strategy = strategy
        self.streak_limit = streak_limit
        self.streak = 0
        self._deep: list = []
        self._best: list = []
        self._open: dict[int, Node] = {}

    def __len__(self) -> int:
        return len(self._open)

    def push(self, node: Node):
        self._open[node.id] = node
        heapq.heappush(self._deep, (-node.depth, -node.id))
        heapq.heappush(self._best, (node.lower_bound, node.id))

    def _pop_from(self, heap, key) -> Node:
        while True:
            entry = heapq.heappop(heap)
            node = self._open.pop(key(entry), None)
            if node is not None:
                return node

    def pop(self) -> Node:
        if not self._open:
            raise IndexError("pop from empty node selector")
        dfs = self.strategy == "dfs" or (self.strategy == "hybrid" and self.streak < self.streak_limit)
        if dfs:
            self.streak += 1
            return self._pop_from(self._deep, lambda e: -e[1])
        self.streak = 0
        return self._pop_from(self._best, lambda e: e[1])

    def lower_bound(self) -> float:
        return min((nd.lower_bound for nd in self._open.values()), default=INF)

    def clear(self):
        self._open.clear()
        self._deep.clear()
        self._best.clear()


# ---------------------------------------------------------------------------
# branching


def branching_variable(x, is_int, tol: float = TOL.integrality) -> int | None:
    """Most fractional integer variable (lowest index on ties), or None."""
    x = np.asarray(x, dtype=float)
    frac = x - np.floor(x)
    score = np.minimum(frac, 1.0 - frac)
    score = np.where(np.asarray(is_int, bool) & (score > tol), score, -1.0)
    best = float(score.max(initial=-1.0))
    if best < 0:
        return None
    return int(np.flatnonzero(score >= best - 1e-12)[0])


def branch(node: Node, x, is_int, ids, prefix: tuple | None = None) -> tuple[Node, Node]:
    """Split on the most fractional variable: ``x_i <= floor`` and ``x_i >= ceil``.

    Returns ``(first, second)`` where ``second`` is the child pushed last and
    therefore explored first by depth-first selection.
    """
    i = branching_variable(x, is_int)
    if i is None:
        raise ValueError("LP solution is integral; nothing to branch on")
    return _split(node, i, math.floor(x[i]), math.ceil(x[i]), x[i], ids, prefix)


def _split(node, i, down, up, value, ids, prefix):
    prefix = node.changes if prefix is None else prefix
    depth = node.depth + 1
    down_ch = BoundChange(i, False, float(down), INF, depth, BRANCHING)
    up_ch = BoundChange(i, True, float(up), -INF, depth, BRANCHING)
    down_node = Node(next(ids), node.id, depth, prefix + (down_ch,), node.lower_bound, down_ch)
    up_node = Node(next(ids), node.id, depth, prefix + (up_ch,), node.lower_bound, up_ch)
    if value - down >= 0.5:
        return down_node, up_node
    return up_node, down_node


# ---------------------------------------------------------------------------
# solver


class _Finished(Exception):
    def __init__(self, status: str):
        self.status = status


class Solver:
    def __init__(self, model: MipModel, settings: Settings | None = None):
        self.model = model
        self.settings = settings or Settings()
        n = model.n
        self.global_lb = model.lb.copy()
        self.global_ub = model.ub.copy()
        self.glb_stamp = np.full(n, INF)
        self.gub_stamp = np.full(n, INF)
        self.is_int = model.is_int.astype(np.uint8)
        self.incumbent = INF
        self.incumbent_x: np.ndarray | None = None
        self.stats = SearchStats()
        if self.settings.use_pool:
            self.store: LearnedStore = ConflictPool(pool_capacity(model.n, model.m))
        else:
            self.store = LearnedStore()
        self.registry: dict[int, object] = {}
        self.learned: list = []
        self._ids = iter(range(1, 1 << 62))
        self._new_at_node = False
        self._incomplete = False

    # -- helpers -------------------------------------------------------------
    def lookup(self, reason: Reason):
        if reason.kind == "row":
            return self.model.rows[reason.ident]
        return self.registry[reason.ident]

    def cutoff_delta(self) -> float:
        z = self.incumbent
        if self.model.objective_is_integral() and float(z).is_integer():
            return 1.0
        return 1e-6 * max(1.0, abs(z))

    def cutoff_row(self) -> LinearRow:
        """``c x + offset <= incumbent - delta`` written as a ``>=`` row."""
        rhs = self.incumbent - self.cutoff_delta() - self.model.offset
        return LinearRow.from_dense(-self.model.c, -rhs)

    def _record(self, c):
        if self.settings.record_learned:
            self.learned.append(c)

    def _store(self, c):
        if not self._new_at_node:
            self._new_at_node = True
            self.store.update_pass()
        self.registry[c.id] = c
        self.store.insert(c)

    def _no_better_solution(self, stamp: float):
        raise _Finished("infeasible" if math.isinf(stamp) else "exhausted")

    def _apply_unit(self, c: ConflictConstraint):
        var, d, value = c.literals[0]
        if d == "upper":
            bound = math.floor(value + TOL.integrality) + 1.0 if self.is_int[var] else value
            if bound > self.global_lb[var]:
                self.global_lb[var] = bound
                self.glb_stamp[var] = min(self.glb_stamp[var], c.stamp)
        else:
            bound = math.ceil(value - TOL.integrality) - 1.0 if self.is_int[var] else value
            if bound < self.global_ub[var]:
                self.global_ub[var] = bound
                self.gub_stamp[var] = min(self.gub_stamp[var], c.stamp)
        if self.global_lb[var] > self.global_ub[var] + TOL.feasibility:
            self._no_better_solution(min(self.glb_stamp[var], self.gub_stamp[var]))

    def _learn_conflicts(self, journal: BoundJournal, reason, origin: str) -> list:
        res = analyze_conflict(journal, reason, self.settings.scheme, self.lookup, origin=origin)
        self.stats.discarded_conflicts += res.discarded
        if res.global_infeasible:
            self._no_better_solution(res.stamp)
        for c in res.constraints:
            self._record(c)
            if len(c) == 1:
                self.stats.unit_conflicts += 1
                self._apply_unit(c)
            else:
                self.stats.conflict_constraints += 1
                self._store(c)
        return res.constraints

    def handle_infeasible_lp(self, journal: BoundJournal, ray, extra_rows=()) -> list:
        """Learn from a Farkas ray according to the mode; returns what was learned.

        Unit conflicts come back too, although they are applied as global
        bounds instead of being stored.
        """
        s = self.settings
        if not (s.analyze_lp or s.dual_ray):
            return []
        cutoff = self.model.m if extra_rows else None
        proof = build_proof_constraint(
            ray, self.model, extra_rows, journal.bounds(), journal.global_bounds(), cutoff,
            self.incumbent if extra_rows else None, (self.glb_stamp, self.gub_stamp),
        )
        if proof is None:
            self.stats.birth_failures += 1
            return []
        if proof.proves_infeasibility:
            self._record(proof)
            self._no_better_solution(proof.stamp)
        learned = []
        if s.dual_ray:
            self._record(proof)
            self.stats.proof_constraints += 1
            self._store(proof)
            learned.append(proof)
        if s.analyze_lp:
            _, b = stack_rows(self.model, extra_rows)
            relax = relax_local_bounds(ray, b, journal.bounds(), journal.global_bounds())
            if relax.candidates:
                self.stats.relaxation_events += 1
                self.stats.reason_size_before += relax.candidates
                self.stats.reason_size_after += len(relax.survivors)
            reason = initial_reason(proof, relax.survivors, journal)
            learned += self._learn_conflicts(journal, reason, "lp-conflict")
        return learned

    def _new_incumbent(self, x: np.ndarray, value: float):
        self.incumbent = value
        self.incumbent_x = x
        self.stats.incumbents += 1
        removed = self.store.on_new_incumbent(value)
        if removed:
            self.store.update_pass()
        log.debug("incumbent %.6g (%d pooled constraints dropped)", value, len(removed))

    # -- main loop -------------------------------------------------------------
    def solve(self) -> SolveResult:
        start = time.perf_counter()
        model, s = self.model, self.settings
        selector = NodeSelector(s.node_selection, s.hybrid_streak)
        status = None
        if model.trivially_infeasible:
            status = "infeasible"
        else:
            selector.push(Node(0, None, 0))
        try:
            while status is None and len(selector):
                if self.stats.nodes >= s.node_limit or time.perf_counter() - start > s.time_limit:
                    status = "limit"
                    break
                node = selector.pop()
                if node.lower_bound > self.incumbent - self.cutoff_delta() + TOL.feasibility:
                    self.stats.bound_prunes += 1
                    continue
                outcome = self._process(node, selector)
                if outcome is not None:
                    status = outcome
        except _Finished as fin:
            status = fin.status
        if status is None or status == "exhausted":
            status = "optimal" if self.incumbent_x is not None else "infeasible"
        if status == "optimal" and self._incomplete:
            log.warning("LP stalls left parts of the tree unexplored")
        elapsed = time.perf_counter() - start
        st = self.store.stats
        self.stats.pool_inserted = st.inserted
        self.stats.pool_evictions = st.evicted
        self.stats.age_deletions = st.age_deleted
        self.stats.incumbent_deletions = st.incumbent_deleted
        internal = None if self.incumbent_x is None else self.incumbent
        return SolveResult(
            status=status,
            x=self.incumbent_x,
            objective=None if internal is None else model.user_objective(internal),
            nodes=self.stats.nodes,
            time=elapsed,
            stats=self.stats,
            internal_objective=internal,
            learned=self.learned,
            complete=not self._incomplete,
        )

    def _process(self, node: Node, selector: NodeSelector) -> str | None:
        model, s = self.model, self.settings
        self.stats.nodes += 1
        self._new_at_node = False
        journal = BoundJournal(self.global_lb, self.global_ub, self.is_int, self.glb_stamp, self.gub_stamp)
        if not journal.replay(node.changes):
            return None
        journal.depth = node.depth
        mark = len(journal.changes)
        learned = self.store.constraints()
        fix = propagate_fixpoint(model.rows, learned, journal, model.var_rows)
        for ident in fix.considered:
            if ident in self.store:
                self.store.record_propagation(ident, ident in fix.deduced)
        for ch in journal.changes[mark:]:
            if ch.reason.kind == "conflict":
                self.stats.conflict_deductions += 1
            elif ch.reason.kind == "proof":
                self.stats.proof_deductions += 1
        if fix.infeasible:
            self.stats.propagation_infeasible += 1
            if s.analyze_propagation:
                reason = sink_reason(journal, fix.culprit, self.lookup)
                if self._learn_conflicts(journal, reason, "propagation-conflict"):
                    self.stats.conflicts_analyzed += 1
            return None

        extra = [self.cutoff_row()] if self.incumbent_x is not None else []
        lp = solve_lp(model, journal.bounds(), extra)
        self.stats.lp_solves += 1
        self.stats.lp_iterations += lp.iterations
        if lp.status == "infeasible":
            self.stats.infeasible_lps += 1
            if self.handle_infeasible_lp(journal, lp.farkas, extra):
                self.stats.conflicts_analyzed += 1
            return None
        if lp.status == "unbounded":
            if node.depth == 0 and self.incumbent_x is None:
                return "unbounded"
            lp.status = "stalled"
        if lp.status == "stalled":
            self.stats.lp_stalls += 1
            self._branch_without_lp(node, journal, selector)
            return None

        if lp.objective > self.incumbent - self.cutoff_delta() + TOL.feasibility:
            self.stats.bound_prunes += 1
            return None
        node.lower_bound = max(node.lower_bound, lp.objective)
        j = branching_variable(lp.x, model.is_int)
        if j is None:
            x = lp.x.copy()
            xr = x.copy()
            xr[model.is_int] = np.round(xr[model.is_int])
            if check_solution(model, xr).feasible:
                x = xr
            rep = check_solution(model, x)
            if rep.feasible and rep.objective < self.incumbent:
                self._new_incumbent(x, rep.objective)
            return None
        prefix = tuple(journal.changes)
        first, second = _split(node, j, math.floor(lp.x[j]), math.ceil(lp.x[j]), lp.x[j], self._ids, prefix)
        selector.push(first)
        selector.push(second)
        return None

    def _branch_without_lp(self, node: Node, journal: BoundJournal, selector: NodeSelector):
        free = np.flatnonzero(self.model.is_int & (journal.ub - journal.lb > 0.5))
        if free.size == 0:
            self._incomplete = True
            return
        i = int(free[0])
        lo, hi = journal.lb[i], journal.ub[i]
        if np.isfinite(lo) and np.isfinite(hi):
            mid = math.floor((lo + hi) / 2)
        elif np.isfinite(lo):
            mid = lo
        elif np.isfinite(hi):
            mid = hi - 1
        else:
            mid = 0.0
        first, second = _split(node, i, mid, mid + 1, mid + 0.5, self._ids, tuple(journal.changes))
        selector.push(first)
        selector.push(second)


def solve(model: MipModel, settings: Settings | None = None) -> SolveResult:
    return Solver(model, settings).solve()
