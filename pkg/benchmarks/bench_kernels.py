#!/usr/bin/env python3
"""Benchmark the hot kernels' numba fast path against the numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--rows 200000] [--repeats 7]

Both implementations are importable side by side (the PROXYAUDIT_BACKEND
environment variable only picks which one the library binds at import time),
so this script times each pair directly, checks they agree on the benchmark
inputs, and prints a per-kernel comparison table.
"""

import argparse
import statistics
import time

import numpy as np

from proxyaudit import kernels


def timeit(fn, repeats):
    """Median wall-clock seconds over ``repeats`` calls (after one warmup)."""
    fn()  # warmup: triggers JIT compilation on the numba path
    samples = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - started)
    return statistics.median(samples)


def bench_joint_counts(rng, rows, repeats):
    ka, kb = 12, 40
    a = rng.integers(0, ka, rows).astype(np.int64)
    b = rng.integers(0, kb, rows).astype(np.int64)
    a[rng.random(rows) < 0.02] = -1  # sprinkle missing codes
    counts_np, n_np = kernels.joint_counts_np(a, b, ka, kb)
    counts_nb, n_nb = kernels.joint_counts_nb(a, b, ka, kb)
    assert n_np == n_nb and np.array_equal(counts_np, counts_nb)
    return (
        timeit(lambda: kernels.joint_counts_np(a, b, ka, kb), repeats),
        timeit(lambda: kernels.joint_counts_nb(a, b, ka, kb), repeats),
    )


def bench_conj3_counts(rng, rows, repeats):
    parent = rng.random(rows) < 0.5
    cond = rng.random(rows) < 0.3
    target = rng.random(rows) < 0.4
    assert kernels.conj3_counts_np(parent, cond, target) == kernels.conj3_counts_nb(
        parent, cond, target
    )
    return (
        timeit(lambda: kernels.conj3_counts_np(parent, cond, target), repeats),
        timeit(lambda: kernels.conj3_counts_nb(parent, cond, target), repeats),
    )


def bench_best_split(rng, rows, repeats):
    rows = min(rows, 20_000)  # the split scan is the slow kernel; keep it sane
    X = rng.normal(size=(rows, 8))
    y = rng.integers(0, 2, rows).astype(np.int64)
    got_np = kernels.best_split_np(X, y, 2, 5)
    got_nb = kernels.best_split_nb(X, y, 2, 5)
    assert got_np == got_nb, (got_np, got_nb)
    return (
        timeit(lambda: kernels.best_split_np(X, y, 2, 5), repeats),
        timeit(lambda: kernels.best_split_nb(X, y, 2, 5), repeats),
    )


BENCHES = (
    ("joint_counts", bench_joint_counts),
    ("conj3_counts", bench_conj3_counts),
    ("best_split", bench_best_split),
)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare against")

    print(f"active library backend: {kernels.active_backend()}")
    print(f"rows={args.rows}  repeats={args.repeats} (median reported)\n")
    header = f"{'kernel':<14}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for name, bench in BENCHES:
        t_np, t_nb = bench(rng, args.rows, args.repeats)
        print(
            f"{name:<14}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms"
            f"{t_np / t_nb:>9.1f}x"
        )


if __name__ == "__main__":
    main()
