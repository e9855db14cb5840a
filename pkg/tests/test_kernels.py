import numpy as np
import pytest

from mipconflict import kernels
from mipconflict.config import TOL

IMPLS = kernels.available()


def test_compiled_backend_builds():
    assert "cython" in IMPLS, "compiled extension missing; run pip install -e ."
    assert kernels.BACKEND == "cython"


def random_case(rng):
    k = int(rng.integers(1, 7))
    n = k + 2
    idx = rng.choice(n, size=k, replace=False).astype(np.int64)
    vals = rng.choice([-1, 1], size=k) * rng.uniform(0.1, 5, size=k)
    lb = rng.uniform(-5, 0, size=n)
    ub = lb + rng.uniform(0, 6, size=n)
    lb[rng.random(n) < 0.1] = -np.inf
    ub[rng.random(n) < 0.1] = np.inf
    is_int = (rng.random(n) < 0.5).astype(np.uint8)
    lhs = float(rng.uniform(-6, 6))
    return idx, vals, lhs, lb, ub, is_int


@pytest.mark.skipif(len(IMPLS) < 2, reason="needs both backends")
def test_backends_agree(rng):
    py, cy = IMPLS["python"], IMPLS["cython"]
    for _ in range(3000):
        idx, vals, lhs, lb, ub, is_int = random_case(rng)
        assert py.max_activity(idx, vals, lb, ub) == cy.max_activity(idx, vals, lb, ub)
        args = (idx, vals, lhs, lb, ub, is_int, TOL.feasibility, TOL.deduction, TOL.integrality)
        a, b = py.row_deductions(*args), cy.row_deductions(*args)
        assert a[0] == b[0]
        if a[0] > 0:
            assert list(a[2]) == list(b[2])
            assert [bool(v) for v in a[3]] == [bool(v) for v in b[3]]
            np.testing.assert_allclose(a[4], b[4], rtol=0, atol=1e-12)
        vars_ = idx
        upper = (rng.random(len(idx)) < 0.5).astype(np.uint8)
        vv = np.round(rng.uniform(-5, 5, size=len(idx)))
        assert py.conflict_state(vars_, upper, vv, lb, ub, 1e-6) == cy.conflict_state(vars_, upper, vv, lb, ub, 1e-6)


@pytest.mark.parametrize("impl", sorted(IMPLS))
def test_empty_row(impl):
    k = IMPLS[impl]
    e = np.zeros(0, np.int64)
    z = np.zeros(0)
    assert k.max_activity(e, z, np.zeros(2), np.ones(2)) == 0.0
    assert k.row_deductions(e, z, 1.0, np.zeros(2), np.ones(2), np.zeros(2, np.uint8), 1e-6, 1e-7, 1e-6)[0] == -1
    assert k.row_deductions(e, z, 0.0, np.zeros(2), np.ones(2), np.zeros(2, np.uint8), 1e-6, 1e-7, 1e-6)[0] == 0


@pytest.mark.parametrize("impl", sorted(IMPLS))
def test_conflict_states(impl):
    k = IMPLS[impl]
    vars_ = np.array([0, 1], np.int64)
    upper = np.array([1, 1], np.uint8)  # stored bounds x1 <= 0, x2 <= 0
    vals = np.zeros(2)
    lb = np.zeros(2)
    assert k.conflict_state(vars_, upper, vals, lb, np.array([0.0, 1.0]), 1e-6) == (1, 1)
    assert k.conflict_state(vars_, upper, vals, lb, np.array([0.0, 0.0]), 1e-6) == (-1, -1)
    assert k.conflict_state(vars_, upper, vals, lb, np.array([1.0, 1.0]), 1e-6) == (0, -1)
