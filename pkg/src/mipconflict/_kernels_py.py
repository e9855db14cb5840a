"""Pure-numpy propagation kernels (fallback for the compiled ``_kernels``)."""
import math

import numpy as np

INF = math.inf


def _contributions(idx, vals, lb, ub):
    return np.where(vals > 0, vals * ub[idx], vals * lb[idx])


def max_activity(idx, vals, lb, ub):
    if len(idx) == 0:
        return 0.0
    contrib = _contributions(idx, vals, lb, ub)
    if np.any(np.isinf(contrib)):
        return INF
    return float(contrib.sum())


def row_deductions(idx, vals, lhs, lb, ub, is_int, feastol, dedtol, inttol):
    """Bound tightening for ``vals . x[idx] >= lhs``.

    Returns ``(status, maxact, vars, lower, values)``; ``status`` is -1 when the
    row cannot be satisfied within the bounds, otherwise the deduction count.
    """
    if len(idx) == 0:
        status = -1 if lhs > feastol * max(1.0, abs(lhs)) else 0
        return status, 0.0, [], [], []
    contrib = _contributions(idx, vals, lb, ub)
    inf_mask = np.isinf(contrib)
    ninf = int(inf_mask.sum())
    finite = float(contrib[~inf_mask].sum())
    if ninf == 0 and finite < lhs - feastol * max(1.0, abs(lhs)):
        return -1, finite, [], [], []
    if ninf > 1:
        return 0, INF, [], [], []
    if ninf == 1:
        cand = np.flatnonzero(inf_mask)
        resid = np.array([finite])
    else:
        cand = np.arange(len(idx))
        resid = finite - contrib
    out_vars, out_lower, out_vals = [], [], []
    for k, r in zip(cand, resid):
        a = vals[k]
        j = int(idx[k])
        bound = (lhs - r) / a
        if a > 0:
            if is_int[j]:
                bound = math.ceil(bound - inttol)
            if bound > lb[j] + dedtol:
                if bound > ub[j]:
                    if bound > ub[j] + feastol * max(1.0, abs(ub[j])):
                        return -1, (finite if ninf == 0 else INF), [], [], []
                    bound = ub[j]
                    if bound <= lb[j] + dedtol:
                        continue
                out_vars.append(j)
                out_lower.append(True)
                out_vals.append(float(bound))
        else:
            if is_int[j]:
                bound = math.floor(bound + inttol)
            if bound < ub[j] - dedtol:
                if bound < lb[j]:
                    if bound < lb[j] - feastol * max(1.0, abs(lb[j])):
                        return -1, (finite if ninf == 0 else INF), [], [], []
                    bound = lb[j]
                    if bound >= ub[j] - dedtol:
                        continue
                out_vars.append(j)
                out_lower.append(False)
                out_vals.append(float(bound))
    return len(out_vars), (finite if ninf == 0 else INF), out_vars, out_lower, out_vals


def conflict_state(vars_, upper, vals, lb, ub, tol):
    """Classify a bound-disjunction constraint under the current bounds.

    Each literal is a stored conflicting bound (``x <= v`` when ``upper``).
    Returns ``(-1, -1)`` if every stored bound holds (infeasible), ``(1, k)`` if
    all but literal ``k`` hold, ``(0, -1)`` otherwise.
    """
    if len(vars_) == 0:
        return -1, -1
    cur_ub = ub[vars_]
    cur_lb = lb[vars_]
    # the negation of a literal is already satisfied
    if np.any(np.where(upper, cur_lb > vals + tol, cur_ub < vals - tol)):
        return 0, -1
    holds = np.where(upper, cur_ub <= vals + tol, cur_lb >= vals - tol)
    free = np.flatnonzero(~holds)
    if free.size == 0:
        return -1, -1
    if free.size == 1:
        return 1, int(free[0])
    return 0, -1
