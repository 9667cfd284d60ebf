#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Both implementation modules are imported directly, so a single process
measures both regardless of the PUBAG_BACKEND environment flag. The first
numba call per kernel is excluded from timing (it may trigger JIT
compilation when the on-disk cache is cold).

Usage:
    python3 benchmarks/backend_bench.py [--n 2000] [--dim 50] [--repeats 3]
"""

import argparse
import time

import numpy as np

from pubag.data import Dataset
from pubag.seeding import kernel_seed


def load_backends():
    from pubag.kernels import _numpyimpl

    impls = {"numpy": _numpyimpl}
    try:
        from pubag.kernels import _numbaimpl

        impls["numba"] = _numbaimpl
    except ImportError:
        print("note: numba not importable, benchmarking the numpy backend only")
    return impls


def make_problem(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, size=(n, dim))
    y = np.where(rng.random(n) < 0.3, 1.0, -1.0)
    x[y > 0, 0] += 1.0
    ds = Dataset.from_dense(x)
    rows = np.arange(n, dtype=np.int64)
    n_pos = int((y > 0).sum())
    cost = np.where(y > 0, (n - n_pos) / n, n_pos / n)
    return ds, rows, y, cost


def workloads(args):
    ds, rows, y, cost = make_problem(args.n, args.dim)
    nk = min(args.n, args.kernel_n)
    dsk, rowsk, yk, costk = make_problem(nk, args.dim, seed=1)
    seed = kernel_seed(0)
    coef = np.full(nk, 1.0 / nk)

    return [
        ("svm_linear_cd", lambda impl: impl.svm_linear_cd(
            ds.indptr, ds.indices, ds.values, rows, y, cost,
            ds.n_features, 1e-3, 1000, seed)),
        ("svm_kernel_cd (rbf)", lambda impl: impl.svm_kernel_cd(
            dsk.indptr, dsk.indices, dsk.values, rowsk, yk, costk,
            1, 8.0, 1e-3, 1000, seed, 6144)),
        ("logit_newton", lambda impl: impl.logit_newton(
            ds.indptr, ds.indices, ds.values, rows, y, cost,
            1.0, ds.n_features, 1e-6, 100)),
        ("expansion_scores (rbf)", lambda impl: impl.expansion_scores(
            dsk.indptr, dsk.indices, dsk.values, rowsk, coef, 1, 8.0,
            ds.indptr, ds.indices, ds.values, rows)),
        ("permutation_rounds", lambda impl: impl.permutation_rounds(
            args.n, 200, seed)),
    ]


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.monotonic()
        fn()
        times.append(time.monotonic() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="rows for linear kernels")
    ap.add_argument("--kernel-n", type=int, default=1200,
                    help="rows for the quadratic-cost kernel solver")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    impls = load_backends()
    names = list(impls)
    header = f"{'kernel':<24}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'ratio':>10}"
    print(header)
    print("-" * len(header))
    for label, call in workloads(args):
        row = f"{label:<24}"
        per_backend = {}
        for name in names:
            impl = impls[name]
            call(impl)  # warm-up; compiles numba on a cold cache
            per_backend[name] = best_of(lambda: call(impl), args.repeats)
            row += f"{per_backend[name]:>11.4f}s"
        if len(names) == 2:
            row += f"{per_backend['numpy'] / per_backend['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
