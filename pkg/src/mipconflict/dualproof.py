"""Dual-ray analysis: proof constraints from Farkas rays, sparse initial
reasons by relaxing local bounds, and their hand-off to conflict analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import INF, TOL
from .confgraph import InitialReason, next_id
from .lp import FarkasRay, stack_rows
from .model import LinearRow, LocalBounds, MipModel
from .propagate import BoundJournal, maximal_activity


@dataclass(eq=False)
class ProofConstraint:
    """Aggregated row ``(gamma A) x >= gamma b``, globally valid."""

    row: LinearRow
    includes_cutoff: bool = False
    stamp: float = INF
    ray_id: int | None = None
    id: int = field(default_factory=next_id)
    age: int = 0

    kind = "proof"

    @property
    def coefficients(self) -> LinearRow:
        return self.row

    @property
    def lhs(self) -> float:
        return self.row.lhs

    @property
    def incumbent_stamp(self) -> float | None:
        return None if math.isinf(self.stamp) else self.stamp

    @property
    def proves_infeasibility(self) -> bool:
        """Empty support with positive left-hand side: ``0 >= lhs > 0``."""
        return self.row.indices.size == 0 and self.row.lhs > TOL.feasibility

    def support(self) -> np.ndarray:
        return self.row.indices

    def satisfied_by(self, x, tol: float = TOL.feasibility):
        x = np.asarray(x)
        act = x[..., self.row.indices] @ self.row.values
        return act >= self.row.lhs - tol * max(1.0, abs(self.row.lhs))


def build_proof_constraint(
    ray: FarkasRay,
    model: MipModel,
    extra_rows=(),
    local: LocalBounds | None = None,
    global_bounds: LocalBounds | None = None,
    cutoff_row: int | None = None,
    incumbent: float | None = None,
    global_stamps: tuple[np.ndarray, np.ndarray] | None = None,
) -> ProofConstraint | None:
    """Aggregate the rows with the ray multipliers.

    Returns None when the result is not violated by ``local`` after dropping
    negligible coefficients.
    """
    A, b = stack_rows(model, extra_rows)
    gamma = np.asarray(ray.gamma, dtype=float)
    coefs = gamma @ A if A.shape[0] else np.zeros(model.n)
    lhs = float(gamma @ b)
    glob = global_bounds if global_bounds is not None else model.global_bounds()
    includes_cutoff = cutoff_row is not None and gamma[cutoff_row] > TOL.zero
    stamp = float(incumbent) if includes_cutoff and incumbent is not None else INF

    tiny = np.flatnonzero((coefs != 0) & (np.abs(coefs) <= TOL.zero))
    for i in tiny:
        a = coefs[i]
        bound = glob.ub[i] if a > 0 else glob.lb[i]
        if not np.isfinite(bound):
            continue
        # x_i moved to the side of the rhs at its most favourable global bound
        lhs -= a * bound
        coefs[i] = 0.0
        if global_stamps is not None:
            stamp = min(stamp, float((global_stamps[1] if a > 0 else global_stamps[0])[i]))
    row = LinearRow.from_dense(coefs, lhs)
    proof = ProofConstraint(row, includes_cutoff=includes_cutoff, stamp=stamp)
    if local is not None:
        act = maximal_activity(row, local)
        if not act < lhs - TOL.zero * max(1.0, abs(lhs)):
            return None
    return proof


@dataclass
class Relaxation:
    bounds: LocalBounds
    survivors: list[tuple[int, str, float]]
    candidates: int
    margin: float


def relax_local_bounds(ray: FarkasRay, b: np.ndarray, local: LocalBounds,
                       global_bounds: LocalBounds) -> Relaxation:
    """Greedily reset local bounds to global ones while the ray stays a certificate.

    Bounds are tried in ascending order of the margin they consume; ``b`` is the
    row left-hand side vector the ray was computed for.
    """
    rlow, rupp = np.asarray(ray.rlow), np.asarray(ray.rupp)
    margin = ray.value(np.asarray(b), local.lb, local.ub)
    cand = []
    for i in np.flatnonzero(rlow > 0):
        if local.lb[i] > global_bounds.lb[i]:
            cand.append((rlow[i] * (local.lb[i] - global_bounds.lb[i]), int(i), "lower"))
    for i in np.flatnonzero(rupp < 0):
        if local.ub[i] < global_bounds.ub[i]:
            cand.append((-rupp[i] * (global_bounds.ub[i] - local.ub[i]), int(i), "upper"))
    cand.sort(key=lambda t: (t[0], t[1], t[2]))
    relaxed = local.copy()
    survivors = []
    for cost, i, d in cand:
        if np.isfinite(cost) and margin - cost > TOL.zero:
            margin -= cost
            if d == "lower":
                relaxed.lb[i] = global_bounds.lb[i]
            else:
                relaxed.ub[i] = global_bounds.ub[i]
        else:
            survivors.append((i, d, float(local.lb[i] if d == "lower" else local.ub[i])))
    survivors.sort()
    return Relaxation(relaxed, survivors, len(cand), float(margin))


def initial_reason(proof: ProofConstraint | None, survivors, journal: BoundJournal) -> InitialReason:
    """Map surviving local bounds to the earliest journal entries achieving them."""
    positions = set()
    for var, d, value in survivors:
        try:
            pos = journal.earliest(var, d == "lower", value)
        except LookupError as exc:
            raise RuntimeError(f"journal does not explain bound {d} {value} on x{var}") from exc
        if pos >= 0:
            positions.add(pos)
    stamp = INF if proof is None else proof.stamp
    if proof is not None and journal.has_stamps and proof.row.indices.size:
        idx, vals = proof.row.indices, proof.row.values
        glob = np.where(vals > 0, journal.global_ub_stamp[idx], journal.global_lb_stamp[idx])
        stamp = min(stamp, float(glob.min()))
    return InitialReason(frozenset(positions), stamp)
