"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are written
to the terminal even when output capture is on.
"""
import math
import sys
import time

import numpy as np
import pytest

from mipconflict.bench import NODE_SHIFT, generate_instance, shifted_geomean
from mipconflict.confgraph import ConflictConstraint
from mipconflict.lp import solve_dense, validate_dense
from mipconflict.pool import MIN_CAPACITY, ConflictPool
from mipconflict.propagate import BoundJournal, propagate_row
from mipconflict.model import LinearRow
from mipconflict.search import MODES, Settings, solve

import oracles
from dives import learned_violations, random_binary_model, random_equality_model
from test_lp import random_lp


def report(pytestconfig, number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        sys.stdout.write("\n" + line + "\n")
    assert ok, line


def corpus_instances():
    out = [("markshare-like", s, k) for s in range(8, 21, 2) for k in range(5)]
    out += [("bin-packing-infeasible", s, k) for s in (4, 5, 6) for k in range(4)]
    out += [("bin-packing-infeasible", 7, k) for k in range(2)]
    out += [("random-setcover", s, k) for s in (20, 40, 60) for k in range(4)]
    return out


@pytest.fixture(scope="module")
def corpus():
    """Every corpus instance solved under every mode at the default 60 s limit."""
    out = {}
    for family, size, seed in corpus_instances():
        model = generate_instance(family, size, seed)
        out[(family, size, seed)] = {mode: solve(model, Settings(mode=mode)) for mode in MODES}
    return out


def test_criterion_1_farkas_soundness(pytestconfig):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    mismatches = bad_rays = rays = 0
    for _ in range(500):
        c, A, b, lb, ub = random_lp(rng)
        expected, _ = oracles.lp_status(c, A, b, lb, ub)
        res = solve_dense(c, A, b, lb, ub)
        mismatches += res.status != expected
        if res.farkas is not None:
            rays += 1
            bad_rays += not validate_dense(res.farkas, A, b, lb, ub).valid
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and bad_rays == 0 and elapsed < 30 and rays > 0
    report(pytestconfig, 1, ok, f"500 LPs, {mismatches} status mismatches, "
           f"{bad_rays}/{rays} invalid rays, {elapsed:.1f} s (< 30 s)")


def test_criterion_2_learned_validity(pytestconfig):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    violations = learned = 0
    selections = ("dfs", "best-bound", "hybrid")
    for k in range(200):
        n = int(rng.integers(6, 15))
        model = random_equality_model(rng, n, m=int(rng.integers(1, 4))) if k % 2 \
            else random_binary_model(rng, n)
        pts = oracles.feasible_points(model.A.toarray(), model.b, model.lb, model.ub)
        res = solve(model, Settings(mode="combined+pool", node_selection=selections[k % 3],
                                    record_learned=True))
        learned += len(res.learned)
        violations += learned_violations(model, res.learned, pts)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 300 and learned > 0
    report(pytestconfig, 2, ok, f"200 MIPs, {learned} learned constraints, "
           f"{violations} violations, {elapsed:.1f} s (< 300 s)")


def test_criterion_3_mode_equivalence(pytestconfig, corpus):
    disagreements = []
    for key, runs in corpus.items():
        statuses = {r.status for r in runs.values()}
        if statuses == {"infeasible"}:
            continue
        values = [r.objective for r in runs.values()]
        if statuses != {"optimal"} or max(values) - min(values) > 1e-6:
            disagreements.append(key)
    ok = len(corpus) >= 60 and not disagreements
    report(pytestconfig, 3, ok, f"{len(corpus)} instances x {len(MODES)} modes, "
           f"{len(disagreements)} disagreements {disagreements[:3]}")


def test_criterion_4_propagation_oracle(pytestconfig):
    rng = np.random.default_rng(404)
    mismatches = 0
    for _ in range(1000):
        k = int(rng.integers(1, 7))
        a = rng.choice([-1, 1], k) * rng.uniform(0.2, 4, k)
        lb = rng.uniform(-4, 1, k).round(2)
        ub = lb + rng.uniform(0, 5, k).round(2)
        lb[rng.random(k) < 0.1] = -math.inf
        ub[rng.random(k) < 0.1] = math.inf
        is_int = rng.random(k) < 0.5
        lhs = float(rng.uniform(-5, 5))
        status, expected = oracles.interval_deductions(a, lhs, lb, ub, is_int)
        j = BoundJournal(lb, ub, is_int=is_int)
        out = propagate_row(LinearRow.from_dense(a, lhs), j)
        if status == "infeasible":
            mismatches += not out.infeasible
            continue
        got = {(c.var, c.direction): c.value for c in j.changes}
        if out.infeasible or got.keys() != expected.keys() \
                or any(abs(got[key] - v) > 1e-9 for key, v in expected.items()):
            mismatches += 1
    report(pytestconfig, 4, mismatches == 0, f"1000 rows, {mismatches} mismatches (tol 1e-9)")


def node_geomeans(corpus, families):
    keys = [k for k in corpus if k[0] in families]
    return len(keys), {m: shifted_geomean([corpus[k][m].nodes for k in keys], NODE_SHIFT) for m in MODES}


def test_criterion_5_directional(pytestconfig, corpus):
    count, g = node_geomeans(corpus, {"markshare-like", "bin-packing-infeasible"})
    q_comb = g["combined"] / g["conflict"]
    q_conf = g["conflict"] / g["none"]
    q_dual = g["dualray"] / g["none"]
    ok = q_comb <= 1.0 and q_conf <= 1.0 and q_dual <= 1.0
    report(pytestconfig, 5, ok, f"{count} instances, n_Q combined/conflict={q_comb:.3f}, "
           f"conflict/none={q_conf:.3f}, dualray/none={q_dual:.3f} (all <= 1)")


def capacity_trace(events=100_000, seed=606):
    rng = np.random.default_rng(seed)
    pool = ConflictPool(MIN_CAPACITY)
    worst = 0
    incumbent = 1e6
    for op in rng.random(events):
        if op < 0.5:
            stamp = float(rng.uniform(0, 2e6)) if rng.random() < 0.3 else math.inf
            pool.insert(ConflictConstraint(((0, "upper", 0.0),), stamp=stamp))
        elif op < 0.95 and len(pool):
            ids = list(pool._entries)
            pool.record_propagation(ids[int(rng.integers(len(ids)))], rng.random() < 0.2)
        elif op < 0.998:
            pool.update_pass()
        else:
            incumbent *= 0.9
            pool.on_new_incumbent(incumbent)
        worst = max(worst, len(pool))
    return worst, pool.capacity


def test_criterion_6_pool_neutrality(pytestconfig, corpus):
    _, g = node_geomeans(corpus, {"markshare-like", "bin-packing-infeasible", "random-setcover"})
    ratio = g["combined+pool"] / g["combined"]
    worst, cap = capacity_trace()
    ok = 0.8 <= ratio <= 1.25 and worst <= cap
    report(pytestconfig, 6, ok, f"node ratio pool/combined={ratio:.3f} in [0.8, 1.25], "
           f"10^5-event trace max size {worst} <= capacity {cap}")


def test_criterion_7_relaxation(pytestconfig, corpus):
    events = before = after = 0
    for runs in corpus.values():
        for r in runs.values():
            events += r.stats.relaxation_events
            before += r.stats.reason_size_before
            after += r.stats.reason_size_after
    ok = events > 0 and after / events < before / events
    mean_b = before / events if events else math.nan
    mean_a = after / events if events else math.nan
    report(pytestconfig, 7, ok, f"{events} LP events, mean reason size {mean_b:.3f} -> {mean_a:.3f}")


def test_criterion_8_shifted_geomean(pytestconfig):
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        v = rng.uniform(0, 1e5, int(rng.integers(1, 200)))
        s = float(rng.choice([1.0, 10.0, 100.0]))
        ref = oracles.shifted_geomean(v, s)
        worst = max(worst, abs(shifted_geomean(v, s) - ref) / abs(ref))
    report(pytestconfig, 8, worst <= 1e-12, f"100 arrays, worst relative error {worst:.2e} (<= 1e-12)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
