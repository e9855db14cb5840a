# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels; same contract as ``_kernels_py``."""
from libc.math cimport ceil, floor, fabs, INFINITY, isinf

cdef inline double _contrib(double a, double l, double u) nogil:
    return a * u if a > 0 else a * l


def max_activity(const long long[:] idx, const double[:] vals, const double[:] lb, const double[:] ub):
    cdef Py_ssize_t k, n = idx.shape[0]
    cdef double total = 0.0, c
    for k in range(n):
        c = _contrib(vals[k], lb[idx[k]], ub[idx[k]])
        if isinf(c):
            return INFINITY
        total += c
    return total


def row_deductions(const long long[:] idx, const double[:] vals, double lhs,
                   const double[:] lb, const double[:] ub, const unsigned char[:] is_int,
                   double feastol, double dedtol, double inttol):
    cdef Py_ssize_t k, n = idx.shape[0], inf_pos = -1
    cdef int ninf = 0
    cdef double finite = 0.0, c, a, bound, resid, maxact
    cdef long long j
    cdef double lhs_tol = feastol * (fabs(lhs) if fabs(lhs) > 1.0 else 1.0)
    if n == 0:
        return (-1 if lhs > lhs_tol else 0), 0.0, [], [], []
    for k in range(n):
        c = _contrib(vals[k], lb[idx[k]], ub[idx[k]])
        if isinf(c):
            ninf += 1
            inf_pos = k
        else:
            finite += c
    if ninf == 0 and finite < lhs - lhs_tol:
        return -1, finite, [], [], []
    if ninf > 1:
        return 0, INFINITY, [], [], []
    maxact = finite if ninf == 0 else INFINITY
    out_vars, out_lower, out_vals = [], [], []
    for k in range(n):
        if ninf == 1:
            if k != inf_pos:
                continue
            resid = finite
        else:
            resid = finite - _contrib(vals[k], lb[idx[k]], ub[idx[k]])
        a = vals[k]
        j = idx[k]
        bound = (lhs - resid) / a
        if a > 0:
            if is_int[j]:
                bound = ceil(bound - inttol)
            if bound > lb[j] + dedtol:
                if bound > ub[j]:
                    if bound > ub[j] + feastol * (fabs(ub[j]) if fabs(ub[j]) > 1.0 else 1.0):
                        return -1, maxact, [], [], []
                    bound = ub[j]
                    if bound <= lb[j] + dedtol:
                        continue
                out_vars.append(j)
                out_lower.append(True)
                out_vals.append(bound)
        else:
            if is_int[j]:
                bound = floor(bound + inttol)
            if bound < ub[j] - dedtol:
                if bound < lb[j]:
                    if bound < lb[j] - feastol * (fabs(lb[j]) if fabs(lb[j]) > 1.0 else 1.0):
                        return -1, maxact, [], [], []
                    bound = lb[j]
                    if bound >= ub[j] - dedtol:
                        continue
                out_vars.append(j)
                out_lower.append(False)
                out_vals.append(bound)
    return len(out_vars), maxact, out_vars, out_lower, out_vals


def conflict_state(const long long[:] vars_, const unsigned char[:] upper, const double[:] vals,
                   const double[:] lb, const double[:] ub, double tol):
    cdef Py_ssize_t k, n = vars_.shape[0], free_pos = -1
    cdef int nfree = 0
    cdef long long j
    if n == 0:
        return -1, -1
    for k in range(n):
        j = vars_[k]
        if upper[k]:
            if lb[j] > vals[k] + tol:
                return 0, -1
            if ub[j] > vals[k] + tol:
                nfree += 1
                free_pos = k
        else:
            if ub[j] < vals[k] - tol:
                return 0, -1
            if lb[j] < vals[k] - tol:
                nfree += 1
                free_pos = k
    if nfree == 0:
        return -1, -1
    if nfree == 1:
        return 1, free_pos
    return 0, -1
