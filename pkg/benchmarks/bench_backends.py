#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [--rounds N]
"""
import argparse
import time

import numpy as np

from coopmac import MacProfile, PowerProfile, build_quadrature, homogeneous_config
from coopmac._core import available_backends
from coopmac.simulator import _run_shard


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=300_000)
    args = parser.parse_args()

    backends = available_backends()
    if len(backends) < 2:
        print("note: compiled kernels not built; benchmarking what exists")
    rule = build_quadrature(15)
    rng = np.random.default_rng(1)

    print(f"{'kernel':34s}" + "".join(f"{name:>14s}" for name in backends)
          + f"{'speedup':>10s}")

    # quadrature chain, full 2^n enumeration
    for n, rho in ((8, 0.5), (10, 0.85)):
        t = rng.uniform(-2.0, 1.0, n)
        masks = np.arange(2 ** n, dtype=np.uint64)
        times = {}
        for name, mod in backends.items():
            times[name] = timeit(lambda m=mod: m.chain_logprob_many(
                masks, t, rho, rule.nodes, rule.log_weights))
        row = f"chain 2^{n} codewords rho={rho:<5}"
        print(f"{row:34s}" + "".join(f"{times[k]*1e3:>12.1f}ms"
                                     for k in backends)
              + (f"{times['python']/times['compiled']:>9.1f}x"
                 if len(times) == 2 else ""))

    # contention kernel
    kvec = rng.integers(1, 10, size=args.rounds).astype(np.int64)
    seeds = rng.integers(0, 2 ** 64, size=args.rounds, dtype=np.uint64)
    times = {}
    for name, mod in backends.items():
        times[name] = timeit(lambda m=mod: m.contention_rounds(
            kvec, seeds, 32, 5))
    row = f"contention {args.rounds} rounds"
    print(f"{row:34s}" + "".join(f"{times[k]*1e3:>12.1f}ms"
                                 for k in backends)
          + (f"{times['python']/times['compiled']:>9.1f}x"
             if len(times) == 2 else ""))

    # one simulation shard end to end (driver shared, kernel differs)
    config = homogeneous_config(5, 20.0, 2.0, 0.0)
    mac, power = MacProfile(), PowerProfile()
    import coopmac.simulator as sim
    times = {}
    for name, mod in backends.items():
        original = sim.kernels
        sim.kernels = mod
        try:
            times[name] = timeit(lambda: _run_shard(
                config, mac, power, np.random.SeedSequence(7),
                args.rounds // 4, collect=False))
        finally:
            sim.kernels = original
    row = f"simulator shard {args.rounds // 4} rounds"
    print(f"{row:34s}" + "".join(f"{times[k]*1e3:>12.1f}ms"
                                 for k in backends)
          + (f"{times['python']/times['compiled']:>9.1f}x"
             if len(times) == 2 else ""))


if __name__ == "__main__":
    main()
