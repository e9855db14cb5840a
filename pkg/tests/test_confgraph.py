import numpy as np
import pytest

from mipconflict.confgraph import (
    ALL_DECISIONS, FUIP, ConflictConstraint, InitialReason, analyze_conflict, antecedents,
    literal_limit, sink_reason,
)
from mipconflict.model import build_model
from mipconflict.propagate import BRANCHING, BoundJournal, Reason, propagate_fixpoint

import oracles
from dives import dive, lookup_for, random_binary_model


@pytest.fixture
def chain():
    """Rows x1 + x3 >= 1 and x2 - x3 >= 0; branch x1 <= 0 then x2 <= 0."""
    model = build_model([0, 0, 0], [([1, 0, 1], ">=", 1), ([0, 1, -1], ">=", 0)],
                        [0, 0, 0], [1, 1, 1], [True] * 3)
    j = BoundJournal(model.lb, model.ub, model.is_int)
    j.depth = 1
    j.tighten(0, False, 0.0, BRANCHING)
    res = propagate_fixpoint(model.rows[:1], (), j)
    assert not res.infeasible and j.lb[2] == 1
    j.depth = 2
    j.tighten(1, False, 0.0, BRANCHING)
    res = propagate_fixpoint(model.rows, (), j)
    assert res.infeasible and res.culprit == Reason("row", 1)
    return model, j, sink_reason(j, res.culprit, lookup_for(model))


def valid_on(model, constraint):
    pts = oracles.feasible_points(model.A.toarray(), model.b, model.lb, model.ub)
    return bool(np.all(constraint.satisfied_by(pts))) if len(pts) else True


class TestExamples:
    def test_all_decisions(self, chain):
        model, j, reason = chain
        res = analyze_conflict(j, reason, ALL_DECISIONS, lookup_for(model))
        (c,) = res.constraints
        assert c.literals == ((0, "upper", 0.0), (1, "upper", 0.0))
        assert c.disjunction() == "x1 > 0 or x2 > 0"
        assert valid_on(model, c)

    def test_fuip(self, chain):
        model, j, reason = chain
        (c,) = analyze_conflict(j, reason, FUIP, lookup_for(model)).constraints
        assert c.literals == ((1, "upper", 0.0), (2, "lower", 1.0))
        assert valid_on(model, c)

    def test_global_only_reason(self):
        j = BoundJournal([0, 0], [1, 1])
        j.tighten(0, True, 1.0, Reason("row", 0), depth=0)
        res = analyze_conflict(j, InitialReason(frozenset({0})))
        assert res.constraints == [] and res.global_infeasible

    def test_unit_conflict(self):
        j = BoundJournal([0, 0], [1, 1])
        j.depth = 1
        j.tighten(1, True, 1.0, BRANCHING)
        for scheme in (FUIP, ALL_DECISIONS):
            (c,) = analyze_conflict(j, InitialReason(frozenset({0})), scheme).constraints
            assert c.literals == ((1, "lower", 1.0),)

    def test_negative_depth_rejected(self):
        j = BoundJournal([0], [1])
        j.tighten(0, True, 1.0, BRANCHING, depth=-1)
        with pytest.raises(ValueError):
            analyze_conflict(j, [0])

    def test_bad_position(self):
        with pytest.raises(IndexError):
            analyze_conflict(BoundJournal([0], [1]), [3])

    def test_literal_limit_discards(self):
        n = 200
        j = BoundJournal(np.zeros(n), np.ones(n))
        for i in range(literal_limit(n) + 1):
            j.depth = i + 1
            j.tighten(i, False, 0.0, BRANCHING)
        res = analyze_conflict(j, range(len(j.changes)), ALL_DECISIONS)
        assert res.constraints == [] and res.discarded == 1 and not res.global_infeasible

    def test_literal_limit_floor(self):
        assert literal_limit(30) == 10
        assert literal_limit(500) == 50


def test_holds_in_and_satisfied_by():
    c = ConflictConstraint(((0, "upper", 0.0), (1, "lower", 2.0)))
    assert c.holds_in(np.array([0.0, 2.0]), np.array([0.0, 5.0]))
    assert not c.holds_in(np.array([0.0, 1.0]), np.array([1.0, 5.0]))
    np.testing.assert_array_equal(c.satisfied_by(np.array([[0, 2], [1, 2], [0, 1]], float)), [False, True, True])


def literal_depths(j, c):
    return [j.changes[j.earliest(v, d == "lower", b)].depth for v, d, b in c.literals]


def covers(c, ch):
    for v, d, b in c.literals:
        if v == ch.var and (d == "lower") == ch.lower:
            if (ch.lower and b >= ch.value - 1e-9) or (not ch.lower and b <= ch.value + 1e-9):
                return True
    return False


def cut_separates(j, c, reason, lookup):
    """No branching vertex reaches the sink without passing a cut vertex."""
    stack, seen = list(reason.positions), set()
    while stack:
        p = stack.pop()
        if p in seen or p < 0:
            continue
        seen.add(p)
        ch = j.changes[p]
        if ch.depth == 0 or covers(c, ch):
            continue
        if ch.reason == BRANCHING:
            return False
        stack += [q for q, _ in antecedents(j, ch, lookup)]
    return True


@pytest.mark.parametrize("scheme", [FUIP, ALL_DECISIONS])
def test_properties_on_random_dives(scheme, backend):
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(400):
        n = int(rng.integers(4, 13))
        model = random_binary_model(rng, n)
        ev = dive(model, rng)
        if ev is None or ev.kind != "propagation":
            continue
        lookup = lookup_for(model)
        res = analyze_conflict(ev.journal, ev.reason, scheme, lookup, max_literals=n)
        pts = oracles.feasible_points(model.A.toarray(), model.b, model.lb, model.ub)
        if res.global_infeasible:
            assert len(pts) == 0
            continue
        for c in res.constraints:
            checked += 1
            assert len({(v, d) for v, d, _ in c.literals}) == len(c.literals)
            assert c.holds_in(ev.journal.lb, ev.journal.ub)
            if len(pts):
                assert np.all(c.satisfied_by(pts))
            assert cut_separates(ev.journal, c, ev.reason, lookup)
            depths = literal_depths(ev.journal, c)
            if scheme == FUIP:
                assert depths.count(max(depths)) == 1
            else:
                for v, d, b in c.literals:
                    assert ev.journal.changes[ev.journal.earliest(v, d == "lower", b)].reason == BRANCHING
    assert checked > 50
