#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--categories N] [--steps S] [--exchanges E] [--iters I]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wealthdyn._accel import HAS_NUMBA
from wealthdyn.kernels import (
    euler_trajectory_numba,
    euler_trajectory_numpy,
    kinetic_exchanges_numba,
    kinetic_exchanges_numpy,
)


def random_rates(n: int, rng: np.random.Generator):
    upper = np.triu(rng.uniform(-0.3, 0.3, (n, n)), 1)
    b = upper - upper.T
    g = rng.uniform(0, 0.2 / n, (n, n))
    np.fill_diagonal(g, 0.0)
    np.fill_diagonal(g, -g.sum(axis=0))
    return b, g


def timed(fn, make_args, iters: int) -> float:
    times = []
    for _ in range(iters):
        args = make_args()
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--categories", type=int, nargs="+", default=[3, 20])
    parser.add_argument("--steps", type=int, default=400)
    parser.add_argument("--exchanges", type=int, default=1_000_000)
    parser.add_argument("--agents", type=int, default=1000)
    parser.add_argument("--iters", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(7)

    if not HAS_NUMBA:
        print("numba not installed; only the numpy path is timed")

    print(f"{'kernel':<32s} {'numpy (ms)':>12s} {'numba (ms)':>12s} {'speedup':>8s} {'max |diff|':>12s}")
    print("-" * 80)
    for n in args.categories:
        m = 1e5
        f0 = rng.dirichlet(np.ones(n)) * m
        b, g = random_rates(n, rng)
        call = (f0, b, g, m, 1.0, args.steps, 1e-9 * m)
        t_np = timed(euler_trajectory_numpy, lambda: call, args.iters)
        ref, _ = euler_trajectory_numpy(*call)
        if HAS_NUMBA:
            euler_trajectory_numba(*call)  # compile
            t_nb = timed(euler_trajectory_numba, lambda: call, args.iters)
            out, _ = euler_trajectory_numba(*call)
            diff = float(np.max(np.abs(out - ref)))
            print(f"{f'euler n={n} steps={args.steps}':<32s} {t_np * 1e3:>12.3f} {t_nb * 1e3:>12.3f} {t_np / t_nb:>7.1f}x {diff:>12.2e}")
        else:
            print(f"{f'euler n={n} steps={args.steps}':<32s} {t_np * 1e3:>12.3f}")

    n, e = args.agents, args.exchanges
    first = rng.integers(0, n, e)
    second = rng.integers(0, n - 1, e)
    second += second >= first
    eps = rng.random(e)
    keep = np.full(n, 0.5)

    def make():
        return np.ones(n), first, second, eps, keep

    t_np = timed(kinetic_exchanges_numpy, make, max(1, args.iters // 2))
    ref = kinetic_exchanges_numpy(*make())
    label = f"kinetic N={n} E={e}"
    if HAS_NUMBA:
        kinetic_exchanges_numba(*make())
        t_nb = timed(kinetic_exchanges_numba, make, args.iters)
        diff = float(np.max(np.abs(kinetic_exchanges_numba(*make()) - ref)))
        print(f"{label:<32s} {t_np * 1e3:>12.3f} {t_nb * 1e3:>12.3f} {t_np / t_nb:>7.1f}x {diff:>12.2e}")
    else:
        print(f"{label:<32s} {t_np * 1e3:>12.3f}")


if __name__ == "__main__":
    main()
