#!/usr/bin/env python3
"""Time every hot kernel on both backends (numba JIT vs pure-numpy fallback).

Run:  python3 benchmarks/bench_kernels.py [--quick]

Both implementations are imported directly, so the MULTILOGISTIC_NUMBA flag
does not matter here. Numba timings exclude JIT compilation (one warm-up
call per kernel).
"""

import argparse
import time

import numpy as np

from multilogistic import generate_sfin
from multilogistic import kernels as K


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_walker_sweep(steps):
    n = 1000
    rng = np.random.Generator(np.random.Philox(1))
    normals = rng.standard_normal((steps, n))
    drift = np.zeros(n)
    sigma = np.ones(n)
    base = np.full(n, 6000.0)

    def run(kernel):
        def go():
            x = base.copy()
            assert kernel(x, normals, drift, sigma, 0.03, 6e6, 150.0) == -1
        return go

    return run(K.advance_walkers_numba), run(K.advance_walkers_numpy)


def bench_walker_sequential(steps):
    n = 1000
    rng = np.random.Generator(np.random.Philox(2))
    normals = rng.standard_normal((steps, n))
    drift = np.zeros(n)
    sigma = np.ones(n)
    base = np.full(n, 6000.0)

    def run(kernel):
        def go():
            x = base.copy()
            assert kernel(x, normals, drift, sigma, 0.03, 6e6, 150.0) == -1
        return go

    return run(K.advance_walkers_seq_numba), run(K.advance_walkers_seq_numpy)


def bench_rk4(steps):
    rng = np.random.default_rng(3)
    x0 = rng.uniform(1.0, 10.0, size=10)
    rates = rng.uniform(-1.0, 1.0, size=10)
    total = float(x0.sum())

    def run(kernel):
        def go():
            traj = np.empty((steps + 1, 10))
            traj[0] = x0
            assert kernel(traj, rates, total, 1e-3) == -1
        return go

    return run(K.integrate_constant_numba), run(K.integrate_constant_numpy)


def bench_bfs(n_seeds):
    net = generate_sfin(20000, 100, seed=4)
    seeds = np.arange(0, n_seeds, dtype=np.int64)

    def run(kernel):
        def go():
            for s in seeds:
                kernel(net.indptr, net.indices, s)
        return go

    return run(K.bfs_layer_sizes_numba), run(K.bfs_layer_sizes_numpy)


def bench_amplitude(steps):
    rng = np.random.default_rng(5)
    m = rng.normal(size=(10, 10))
    coupling = 0.5 * (m + m.T)
    chi0 = rng.uniform(0.2, 1.0, size=10)
    chi0 /= np.linalg.norm(chi0)

    def run(kernel):
        def go():
            traj = np.empty((steps + 1, 10))
            traj[0] = chi0
            assert kernel(traj, coupling, 1e-3) == -1
        return go

    return run(K.amplitude_evolve_numba), run(K.amplitude_evolve_numpy)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    q = 10 if args.quick else 1

    cases = [
        ("walker sweep      (1000 walkers x %d steps)" % (4000 // q),
         bench_walker_sweep(4000 // q)),
        ("walker sequential (1000 walkers x %d steps)" % (400 // q),
         bench_walker_sequential(400 // q)),
        ("rk4 composition   (n=10, %d steps)" % (50000 // q),
         bench_rk4(50000 // q)),
        ("bfs growth        (20k nodes, %d seeds)" % (100 // q),
         bench_bfs(100 // q)),
        ("amplitude flow    (n=10, %d steps)" % (50000 // q),
         bench_amplitude(50000 // q)),
    ]

    print(f"{'kernel':<50} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    print("-" * 82)
    for name, (jit_fn, np_fn) in cases:
        jit_fn()  # JIT warm-up
        t_jit = best_of(jit_fn)
        t_np = best_of(np_fn)
        print(f"{name:<50} {t_jit * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms "
              f"{t_np / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
