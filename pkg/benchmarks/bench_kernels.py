#!/usr/bin/env python3
"""Benchmark the compiled IRLS kernel against the numpy fallback.

Times raw kernel fits on representative replicate shapes, plus one
end-to-end sequential-regression fit per backend.  Run from the repo root:

    python benchmarks/bench_kernels.py [--repeats 50]
"""

import argparse
import time

import numpy as np

import cheapsub._kernels as kernels
from cheapsub._kernels import _pyfallback
from cheapsub.estimators import fit_longitudinal_risk
from cheapsub.simstudy import generate_dgm

try:
    from cheapsub._kernels import _speedups
except ImportError:
    _speedups = None


def _problem(n, p, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    eta = X @ rng.uniform(-0.8, 0.8, size=p)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return X, y, np.zeros(n), np.ones(n)


def time_kernel(impl, problems, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for X, y, off, w in problems:
            impl.irls(X, y, off, w)
        best = min(best, time.perf_counter() - t0)
    return best / len(problems)


def time_longitudinal(impl, data, repeats):
    saved = kernels.irls
    kernels.irls = impl.irls
    try:
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fit_longitudinal_risk(data, 1, targeting=True)
            best = min(best, time.perf_counter() - t0)
        return best
    finally:
        kernels.irls = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled extension not built; nothing to compare "
              "(pip install -e . rebuilds it)")
        return

    print(f"active backend at import: {kernels.BACKEND}")
    print(f"{'case':28s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    for n, p in ((316, 3), (500, 3), (1800, 3), (2000, 3), (20000, 3)):
        problems = [_problem(n, p, s) for s in range(8)]
        t_py = time_kernel(_pyfallback, problems, max(3, args.repeats // 3))
        t_c = time_kernel(_speedups, problems, args.repeats)
        print(f"irls n={n:<6d} p={p:<10d} {t_py * 1e3:10.3f}ms "
              f"{t_c * 1e3:10.3f}ms {t_py / t_c:8.1f}x")

    for n in (500, 2000):
        data = generate_dgm(n, 12345)
        t_py = time_longitudinal(_pyfallback, data, max(3, args.repeats // 3))
        t_c = time_longitudinal(_speedups, data, args.repeats)
        print(f"sequential fit n={n:<8d} {t_py * 1e3:10.3f}ms "
              f"{t_c * 1e3:10.3f}ms {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
