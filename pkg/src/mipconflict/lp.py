"""LP relaxation solver: bounded-variable primal simplex with a Phase-1 that
doubles as the source of Farkas infeasibility certificates.

The working problem is ``A x - s + t = b`` with ``l <= x <= u``, ``s >= 0`` and
artificials ``t >= 0`` on rows whose starting residual is positive.  Phase 1
minimizes ``sum(t)``; if the optimum is positive the slack reduced costs are
the dual multipliers ``gamma >= 0`` of a Farkas ray.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import INF, TOL
from .model import LinearRow, LocalBounds, MipModel

MAX_ITERATIONS = 50_000
REFACTOR_EVERY = 50
DEGENERACY_STREAK = 100


@dataclass
class FarkasRay:
    """Multipliers ``(gamma, rlow, rupp)`` for rows and variable bounds."""

    gamma: np.ndarray
    rlow: np.ndarray
    rupp: np.ndarray

    @classmethod
    def from_gamma(cls, gamma, A: np.ndarray) -> "FarkasRay":
        gamma = np.asarray(gamma, dtype=float)
        r = -(gamma @ A) if A.shape[0] else np.zeros(A.shape[1])
        scale = max(np.max(np.abs(gamma), initial=0.0), 1.0)
        r[np.abs(r) <= TOL.zero * scale] = 0.0
        return cls(gamma, np.maximum(r, 0.0), np.minimum(r, 0.0))

    def value(self, b: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
        """``gamma b + rlow l + rupp u`` (zero multipliers ignore infinite bounds)."""
        total = float(np.dot(self.gamma, b))
        lo = self.rlow != 0
        hi = self.rupp != 0
        with np.errstate(invalid="ignore"):
            total += float(np.dot(self.rlow[lo], lb[lo])) + float(np.dot(self.rupp[hi], ub[hi]))
        return total


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | stalled
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    farkas: FarkasRay | None = None
    ray: np.ndarray | None = None
    basis: tuple | None = None
    iterations: int = 0


@dataclass
class FarkasCheck:
    valid: bool
    max_violation: float
    condition: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def stack_rows(model: MipModel, extra_rows: Iterable = ()) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(A, b)`` of the model rows followed by ``extra_rows``."""
    extra = [_as_row(r, model.n) for r in extra_rows]
    if not extra:
        return model.dense_A, np.asarray(model.b)
    A = np.vstack([model.dense_A] + [r.dense(model.n)[None, :] for r in extra])
    b = np.concatenate([model.b, [r.lhs for r in extra]])
    return A, b


def _as_row(row, n: int) -> LinearRow:
    if isinstance(row, LinearRow):
        return row
    coefs, lhs = row
    coefs = np.asarray(coefs, dtype=float)
    if coefs.shape == (n,):
        return LinearRow.from_dense(coefs, lhs)
    raise ValueError("extra rows must be LinearRow or (dense coefficients, lhs)")


def solve_lp(
    model: MipModel,
    bounds: LocalBounds,
    extra_rows: Sequence = (),
    warm: tuple | None = None,
    max_iter: int = MAX_ITERATIONS,
) -> LpResult:
    """Solve ``min c x s.t. A x >= b`` (model rows plus ``extra_rows``) over ``bounds``."""
    A, b = stack_rows(model, extra_rows)
    return solve_dense(model.c, A, b, bounds.lb, bounds.ub, warm=warm, max_iter=max_iter)


def solve_dense(c, A, b, lb, ub, warm=None, max_iter: int = MAX_ITERATIONS) -> LpResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.shape[0])
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        # crossing bounds: certificate uses the bound multipliers alone
        i = int(np.argmax(lb - ub))
        rlow = np.zeros_like(c)
        rupp = np.zeros_like(c)
        rlow[i], rupp[i] = 1.0, -1.0
        return LpResult("infeasible", farkas=FarkasRay(np.zeros(A.shape[0]), rlow, rupp))
    simplex = _Simplex(c, A, b, lb, ub, max_iter)
    result = simplex.run(warm)
    if result.status == "infeasible":
        check = validate_dense(result.farkas, A, b, lb, ub)
        if not check.valid:
            # certificate lost to round-off; callers must not learn from it
            result = LpResult("stalled", iterations=result.iterations)
    return result


class _Simplex:
    def __init__(self, c, A, b, lb, ub, max_iter):
        self.c, self.A, self.b, self.lb, self.ub = c, A, b, lb, ub
        self.m, self.n = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    # -- setup -----------------------------------------------------------
    def _cold_start(self):
        m, n, A, b = self.m, self.n, self.A, self.b
        x0 = np.where(np.isfinite(self.lb), self.lb, np.where(np.isfinite(self.ub), self.ub, 0.0))
        resid = b - A @ x0 if m else np.zeros(0)
        art_rows = np.flatnonzero(resid > 0.0)
        k = art_rows.size
        E = np.zeros((m, k))
        E[art_rows, np.arange(k)] = 1.0
        self.M = np.hstack([A, -np.eye(m), E])
        self.N = n + m + k
        self.lo = np.concatenate([self.lb, np.zeros(m), np.zeros(k)])
        self.hi = np.concatenate([self.ub, np.full(m, INF), np.full(k, INF)])
        self.z = np.concatenate([x0, np.zeros(m + k)])
        basis = n + np.arange(m)
        basis[art_rows] = n + m + np.arange(k)
        self.basis = basis
        self.art = np.arange(n + m, n + m + k)
        # basis matrix is diagonal (+1 for artificials, -1 for slacks)
        sign = -np.ones(m)
        sign[art_rows] = 1.0
        self.T = sign[:, None] * self.M
        self.z[basis] = np.where(sign > 0, resid, -resid)
        self._is_basic = np.zeros(self.N, bool)
        self._is_basic[basis] = True
        self.since_refactor = 0

    def _warm_start(self, warm) -> bool:
        basis, at_upper = warm
        m, n = self.m, self.n
        basis = np.asarray(basis, dtype=np.int64)
        if basis.shape != (m,) or (m and basis.max() >= n + m) or len(set(basis.tolist())) != m:
            return False
        self.M = np.hstack([self.A, -np.eye(m)])
        self.N = n + m
        self.lo = np.concatenate([self.lb, np.zeros(m)])
        self.hi = np.concatenate([self.ub, np.full(m, INF)])
        z = np.where(np.isfinite(self.lo), self.lo, np.where(np.isfinite(self.hi), self.hi, 0.0))
        for j in at_upper:
            if j < self.N and np.isfinite(self.hi[j]):
                z[j] = self.hi[j]
        self.z = z
        self.basis = basis
        self.art = np.zeros(0, dtype=np.int64)
        self._is_basic = np.zeros(self.N, bool)
        self._is_basic[basis] = True
        try:
            self._refactor(np.zeros(self.N))
        except np.linalg.LinAlgError:
            return False
        zb = self.z[self.basis]
        tol = TOL.feasibility
        return bool(np.all(zb >= self.lo[self.basis] - tol) and np.all(zb <= self.hi[self.basis] + tol))

    def _refactor(self, cost):
        if self.m:
            Binv = np.linalg.inv(self.M[:, self.basis])
            self.T = Binv @ self.M
            zn = self.z.copy()
            zn[self.basis] = 0.0
            self.z[self.basis] = Binv @ (self.b - self.M @ zn)
        self.d = cost - cost[self.basis] @ self.T if self.m else cost.copy()
        self.since_refactor = 0

    # -- main loop ---------------------------------------------------------
    def run(self, warm) -> LpResult:
        if warm is None or not self._warm_start(warm):
            self._cold_start()
            cost1 = np.zeros(self.N)
            cost1[self.art] = 1.0
            self.d = cost1 - cost1[self.basis] @ self.T if self.m else cost1.copy()
            status = self._iterate(cost1)
            if status == "stalled":
                return LpResult("stalled", iterations=self.iterations)
            self._refactor(cost1)
            infeas = float(np.sum(self.z[self.art]))
            if infeas > TOL.feasibility:
                gamma = np.maximum(self.d[self.n:self.n + self.m], 0.0)
                ray = FarkasRay.from_gamma(gamma, self.A)
                return LpResult("infeasible", farkas=ray, iterations=self.iterations)
            # artificials are pinned at zero for Phase 2
            self.hi[self.art] = 0.0
            self.z[self.art] = np.clip(self.z[self.art], 0.0, 0.0)
        cost = np.zeros(self.N)
        cost[:self.n] = self.c
        self._refactor(cost)
        status = self._iterate(cost)
        if status == "stalled":
            return LpResult("stalled", iterations=self.iterations)
        if status == "unbounded":
            return LpResult("unbounded", ray=self.unbounded_ray, iterations=self.iterations)
        self._refactor(cost)
        x = self.z[:self.n].copy()
        # snap tiny bound violations left by round-off
        x = np.minimum(np.maximum(x, self.lb), self.ub)
        at_upper = tuple(int(j) for j in np.flatnonzero(~self._is_basic[:self.n + self.m])
                         if np.isfinite(self.hi[j]) and self.z[j] >= self.hi[j])
        basis = tuple(int(j) for j in self.basis)
        warm_basis = (basis, at_upper) if all(j < self.n + self.m for j in basis) else None
        return LpResult(
            "optimal",
            x=x,
            objective=float(self.c @ x),
            duals=self.d[self.n:self.n + self.m].copy(),
            reduced_costs=self.d[:self.n].copy(),
            basis=warm_basis,
            iterations=self.iterations,
        )

    def _iterate(self, cost) -> str:
        ptol, otol = TOL.zero, TOL.optimality
        streak = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return "stalled"
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor(cost)
            d, z = self.d, self.z
            cand = ~self._is_basic & (
                ((d < -otol) & (z < self.hi - ptol)) | ((d > otol) & (z > self.lo + ptol))
            )
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "optimal"
            j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.T[:, j] if self.m else np.zeros(0)
            theta, row, hit_upper = self._ratio_test(alpha, direction, bland)
            span = self.hi[j] - self.lo[j]
            if span <= theta:
                theta, row = span, -1
            if not np.isfinite(theta):
                ray = np.zeros(self.N)
                ray[j] = direction
                ray[self.basis] = -direction * alpha
                self.unbounded_ray = ray[:self.n]
                return "unbounded"
            self.iterations += 1
            if theta <= 1e-12:
                streak += 1
                bland = streak >= DEGENERACY_STREAK
            else:
                streak, bland = 0, False
            if self.m:
                self.z[self.basis] -= direction * theta * alpha
            self.z[j] += direction * theta
            if row < 0:
                # bound flip of the entering variable
                self.z[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue
            leaving = self.basis[row]
            self.z[leaving] = self.hi[leaving] if hit_upper else self.lo[leaving]
            self._pivot(row, j)

    def _ratio_test(self, alpha, direction, bland):
        if not self.m:
            return INF, -1, False
        ptol = TOL.pivot
        rate = -direction * alpha
        zb = self.z[self.basis]
        lo = self.lo[self.basis]
        hi = self.hi[self.basis]
        dec = (rate < -ptol) & np.isfinite(lo)
        inc = (rate > ptol) & np.isfinite(hi)
        ratio = np.full(self.m, INF)
        relaxed = np.full(self.m, INF)
        ftol = TOL.zero
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[dec] = (zb[dec] - lo[dec]) / -rate[dec]
            relaxed[dec] = (zb[dec] - lo[dec] + ftol) / -rate[dec]
            ratio[inc] = (hi[inc] - zb[inc]) / rate[inc]
            relaxed[inc] = (hi[inc] - zb[inc] + ftol) / rate[inc]
        theta_max = relaxed.min()
        if not np.isfinite(theta_max):
            return INF, -1, False
        eligible = np.flatnonzero((dec | inc) & (ratio <= theta_max))
        if bland:
            row = int(eligible[np.argmin(self.basis[eligible])])
        else:
            row = int(eligible[np.argmax(np.abs(alpha[eligible]))])
        theta = max(float(ratio[row]), 0.0)
        return theta, row, bool(inc[row])

    def _pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.d = self.d - self.d[j] * T[r]
        self._is_basic[self.basis[r]] = False
        self._is_basic[j] = True
        self.basis[r] = j
        self.since_refactor += 1


def validate_farkas(
    ray: FarkasRay,
    model: MipModel,
    extra_rows: Sequence = (),
    bounds: LocalBounds | None = None,
    tol: float = TOL.zero,
) -> FarkasCheck:
    """Check the Farkas conditions on a (positively scaled) ray."""
    A, b = stack_rows(model, extra_rows)
    bounds = bounds if bounds is not None else model.global_bounds()
    return validate_dense(ray, A, b, bounds.lb, bounds.ub, tol)


def validate_dense(ray: FarkasRay, A, b, lb, ub, tol: float = TOL.zero) -> FarkasCheck:
    gamma = np.asarray(ray.gamma, dtype=float)
    rlow = np.asarray(ray.rlow, dtype=float)
    rupp = np.asarray(ray.rupp, dtype=float)
    if gamma.shape != (A.shape[0],) or rlow.shape != (A.shape[1],) or rupp.shape != (A.shape[1],):
        raise ValueError("ray dimensions do not match the rows")
    scale = max(np.max(np.abs(gamma), initial=0.0), np.max(np.abs(rlow), initial=0.0),
                np.max(np.abs(rupp), initial=0.0))
    if scale == 0.0:
        return FarkasCheck(False, INF, "zero ray")
    g, rl, ru = gamma / scale, rlow / scale, rupp / scale
    agg = g @ A if A.shape[0] else np.zeros(A.shape[1])
    value = FarkasRay(g, rl, ru).value(b, lb, ub)
    if np.isnan(value):
        value = -INF
    checks = [
        ("γ sign", np.max(-g, initial=0.0)),
        ("r̲ sign", np.max(-rl, initial=0.0)),
        ("r̄ sign", np.max(ru, initial=0.0)),
        ("aggregation", np.max(agg + rl + ru, initial=0.0)),
        ("reduced form", max(np.max(np.abs(rl - np.maximum(-agg, 0.0)), initial=0.0),
                             np.max(np.abs(ru - np.minimum(-agg, 0.0)), initial=0.0))),
        ("F₂ strict inequality", tol - value if value <= tol else 0.0),
    ]
    worst = max(v for _, v in checks)
    for name, v in checks:
        if v > tol or (name.startswith("F₂") and v > 0):
            return FarkasCheck(False, float(worst), name)
    return FarkasCheck(True, float(worst), None)
