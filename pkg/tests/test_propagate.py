import math

import numpy as np
import pytest

from mipconflict.confgraph import ConflictConstraint
from mipconflict.model import LinearRow, LocalBounds, build_model
from mipconflict.propagate import (
    BRANCHING, BoundJournal, Reason, activity_residual, contribution, maximal_activity,
    propagate_conflict, propagate_fixpoint, propagate_row,
)

import oracles

INF = math.inf


def row(coefs, lhs=0.0):
    return LinearRow.from_dense(np.asarray(coefs, float), lhs)


def box(lb, ub):
    return LocalBounds(np.asarray(lb, float), np.asarray(ub, float))


class TestActivity:
    def test_mixed_signs(self, backend):
        assert maximal_activity(row([2, -3]), box([0, 0], [1, 2])) == 2

    def test_below_lhs(self, backend):
        assert maximal_activity(row([1, 1]), box([0, 0], [0.5, 0.5])) == 1 < 2

    def test_infinite(self, backend):
        assert maximal_activity(row([1]), box([0], [INF])) == INF

    def test_residuals(self, backend):
        assert activity_residual(row([2, 3], 6), box([0, 0], [5, 1]), 0) == 3
        assert activity_residual(row([2, -3]), box([0, 0], [1, 2]), 1) == 2
        assert activity_residual(row([1, 1]), box([0, 0], [INF, 1]), 0) == 1

    def test_residual_zero_coefficient(self, backend):
        with pytest.raises(ValueError):
            activity_residual(row([1, 0]), box([0, 0], [1, 1]), 1)

    def test_residual_identity(self, backend, rng):
        for _ in range(500):
            a = rng.choice([-1, 1], 5) * rng.uniform(0.5, 3, 5)
            lb = rng.uniform(-3, 0, 5)
            ub = lb + rng.uniform(0, 3, 5)
            b = box(lb, ub)
            r = row(a)
            for i in range(5):
                total = activity_residual(r, b, i) + contribution(r, b, i)
                assert total == pytest.approx(maximal_activity(r, b), abs=1e-12)


class TestPropagateRow:
    def test_continuous(self, backend):
        j = BoundJournal([0, 0], [5, 1])
        out = propagate_row(row([2, 3], 6), j)
        assert out.deduced and j.lb[0] == 1.5

    def test_integer_rounding(self, backend):
        j = BoundJournal([0, 0], [5, 1], is_int=[1, 0])
        propagate_row(row([2, 3], 6), j)
        assert j.lb[0] == 2

    def test_infeasible_leaves_journal(self, backend):
        j = BoundJournal([0, 0], [0.5, 0.5])
        out = propagate_row(row([1, 1], 2), j)
        assert out.infeasible and j.changes == []

    def test_reason_recorded(self, backend):
        j = BoundJournal([0, 0], [5, 1])
        propagate_row(row([2, 3], 6), j, Reason("row", 4))
        assert j.changes[0].reason == Reason("row", 4)

    def test_matches_interval_oracle(self, backend, rng):
        for _ in range(1000):
            k = int(rng.integers(1, 6))
            a = rng.choice([-1, 1], k) * rng.uniform(0.2, 4, k)
            lb = rng.uniform(-4, 1, k).round(2)
            ub = lb + rng.uniform(0, 5, k).round(2)
            lb[rng.random(k) < 0.1] = -INF
            ub[rng.random(k) < 0.1] = INF
            is_int = rng.random(k) < 0.5
            lhs = float(rng.uniform(-5, 5))
            status, expected = oracles.interval_deductions(a, lhs, lb, ub, is_int)
            j = BoundJournal(lb, ub, is_int=is_int)
            out = propagate_row(row(a, lhs), j)
            if status == "infeasible":
                assert out.infeasible
                continue
            assert not out.infeasible
            got = {(c.var, c.direction): c.value for c in j.changes}
            assert got.keys() == expected.keys()
            for key, v in expected.items():
                assert got[key] == pytest.approx(v, abs=1e-9)


def disj(*lits):
    return ConflictConstraint(tuple(lits))


class TestPropagateConflict:
    # stored bounds x1 <= 0 and x2 <= 0, i.e. x1 >= 1 or x2 >= 1
    C = staticmethod(lambda: disj((0, "upper", 0.0), (1, "upper", 0.0)))

    def test_unit(self, backend):
        j = BoundJournal([0, 0], [0, 1], is_int=[1, 1])
        out = propagate_conflict(self.C(), j)
        assert out.deduced and j.lb[1] == 1

    def test_infeasible(self, backend):
        j = BoundJournal([0, 0], [0, 0], is_int=[1, 1])
        assert propagate_conflict(self.C(), j).infeasible

    def test_noop(self, backend):
        j = BoundJournal([0, 0], [1, 1], is_int=[1, 1])
        assert propagate_conflict(self.C(), j).status == "noop"


class TestFixpoint:
    def test_branch_then_fix(self, backend):
        rows = [row([1, 1], 2)]
        j = BoundJournal([0, 0], [1, 1], is_int=[1, 1])
        j.depth = 1
        j.tighten(0, False, 0.0, BRANCHING)
        res = propagate_fixpoint(rows, (), j)
        assert res.infeasible  # x2 <= 1 cannot reach 2 alone

        rows = [row([1, 1], 1)]
        j = BoundJournal([0, 0], [1, 1], is_int=[1, 1])
        j.tighten(0, False, 0.0, BRANCHING)
        res = propagate_fixpoint(rows, (), j)
        assert not res.infeasible and j.lb[1] == 1 and res.rounds <= 2

    def test_contradicting_rows(self, backend):
        rows = [row([1, 1], 2), row([-1, -1], -1)]
        j = BoundJournal([0, 0], [1, 1], is_int=[1, 1])
        res = propagate_fixpoint(rows, (), j)
        assert res.infeasible
        assert len(oracles.feasible_points([[1, 1], [-1, -1]], [2, -1], [0, 0], [1, 1])) == 0

    def test_empty(self, backend):
        j = BoundJournal([0], [1])
        res = propagate_fixpoint([], (), j)
        assert not res.infeasible and j.changes == []

    def test_round_cap(self, backend):
        # x1 >= x2 + 0.5 and x2 >= x1 - ... chatter on continuous bounds
        rows = [row([1, -1], 0.1), row([-1, 1], -10)]
        j = BoundJournal([0, 0], [100, 100])
        res = propagate_fixpoint(rows, (), j, round_cap=3)
        assert res.rounds <= 3


def random_binary_model(rng, n):
    m = int(rng.integers(2, 6))
    rows = []
    for _ in range(m):
        a = rng.integers(-3, 4, n).astype(float)
        a[rng.random(n) < 0.4] = 0
        rhs = float(rng.integers(-2, 3))
        rows.append((a, ">=", rhs))
    return build_model(np.zeros(n), rows, np.zeros(n), np.ones(n), [True] * n)


def test_soundness_by_enumeration(backend, rng):
    for _ in range(150):
        n = int(rng.integers(3, 11))
        model = random_binary_model(rng, n)
        pts = oracles.feasible_points(model.A.toarray(), model.b, model.lb, model.ub)
        j = BoundJournal(model.lb, model.ub, model.is_int)
        j.depth = 1
        for i in rng.choice(n, size=2, replace=False):
            j.tighten(int(i), bool(rng.random() < 0.5), float(rng.integers(0, 2)), BRANCHING)
        lb0, ub0 = j.lb.copy(), j.ub.copy()
        inside = pts[np.all((pts >= lb0) & (pts <= ub0), axis=1)]
        res = propagate_fixpoint(model.rows, (), j)
        if res.infeasible:
            assert len(inside) == 0
            continue
        assert np.all(j.lb >= lb0) and np.all(j.ub <= ub0)
        assert np.all((inside >= j.lb) & (inside <= j.ub))
        lb, ub = j.rebuild()
        assert np.array_equal(lb, j.lb) and np.array_equal(ub, j.ub)


class TestJournal:
    def test_not_tighter_ignored(self):
        j = BoundJournal([0], [1])
        assert j.tighten(0, False, 1.0, BRANCHING) is None
        assert j.changes == []

    def test_positions_monotone_and_replay(self):
        j = BoundJournal([0, 0, 0], [5, 5, 5])
        j.tighten(0, True, 1, BRANCHING, depth=1)
        j.tighten(1, False, 4, Reason("row", 0), depth=1)
        j.tighten(0, True, 2, BRANCHING, depth=2)
        assert [c.pos for c in j.changes] == [0, 1, 2]
        k = BoundJournal([0, 0, 0], [5, 5, 5])
        assert k.replay(j.changes)
        assert np.array_equal(k.lb, j.lb) and np.array_equal(k.ub, j.ub)

    def test_earliest_reaching_position(self):
        j = BoundJournal([0], [1])
        j.tighten(0, False, 0.7, BRANCHING, depth=1)
        j.tighten(0, False, 0.5, BRANCHING, depth=3)
        assert j.earliest(0, False, 0.6) == 1
        assert j.earliest(0, False, 0.8) == 0
        assert j.earliest(0, False, 1.0) == -1
        with pytest.raises(LookupError):
            j.earliest(0, False, 0.2)

    def test_responsible_before(self):
        j = BoundJournal([0], [9])
        j.tighten(0, False, 5, BRANCHING)
        j.tighten(0, False, 3, BRANCHING)
        assert j.responsible(0, False) == 1
        assert j.responsible(0, False, before=1) == 0
        assert j.responsible(0, False, before=0) == -1
