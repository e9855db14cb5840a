"""Compare the compiled and numpy propagation kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Prints per-call timings for each kernel at several row lengths, then the
wall time of a full solve with each backend swapped in.
"""
import argparse
import time
import timeit

import numpy as np

from mipconflict import kernels
from mipconflict.bench import generate_instance
from mipconflict.search import Settings, solve


def row_case(rng, length, n=2048):
    idx = np.sort(rng.choice(n, size=length, replace=False)).astype(np.int64)
    vals = rng.choice([-1.0, 1.0], length) * rng.uniform(0.5, 5.0, length)
    lb = np.zeros(n)
    ub = rng.integers(1, 4, n).astype(float)
    is_int = (rng.random(n) < 0.5).astype(np.uint8)
    lhs = 0.6 * float(np.sum(np.where(vals > 0, vals * ub[idx], 0.0)))
    upper = (rng.random(length) < 0.5).astype(np.uint8)
    return idx, vals, lhs, lb, ub, is_int, upper


def time_kernels(backends, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'length':>8}" + "".join(f"{name + ' us':>14}" for name in backends))
    for length in (8, 64, 512):
        idx, vals, lhs, lb, ub, is_int, upper = row_case(rng, length)
        calls = {
            "max_activity": lambda m: m.max_activity(idx, vals, lb, ub),
            "row_deductions": lambda m: m.row_deductions(idx, vals, lhs, lb, ub, is_int, 1e-6, 1e-7, 1e-6),
            "conflict_state": lambda m: m.conflict_state(idx, upper, np.floor(ub[idx] / 2), lb, ub, 1e-6),
        }
        for name, call in calls.items():
            cells = []
            for mod in backends.values():
                t = min(timeit.repeat(lambda: call(mod), number=repeat, repeat=3)) / repeat
                cells.append(f"{t * 1e6:>14.2f}")
            print(f"{name:<16}{length:>8}" + "".join(cells))


def time_solve(backends, size=18, seed=3):
    model = generate_instance("markshare-like", size, seed)
    print(f"\nsolve markshare-like size {size} seed {seed}, mode combined")
    for name, mod in backends.items():
        saved = kernels.max_activity, kernels.row_deductions, kernels.conflict_state
        kernels.max_activity, kernels.row_deductions, kernels.conflict_state = \
            mod.max_activity, mod.row_deductions, mod.conflict_state
        try:
            start = time.perf_counter()
            res = solve(model, Settings(mode="combined"))
            elapsed = time.perf_counter() - start
        finally:
            kernels.max_activity, kernels.row_deductions, kernels.conflict_state = saved
        print(f"  {name:<8}{elapsed:8.3f} s  nodes={res.nodes}  objective={res.objective}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=2000)
    args = p.parse_args()
    backends = kernels.available()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy fallback only")
    time_kernels(backends, args.repeat)
    time_solve(backends)


if __name__ == "__main__":
    main()
