#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs a fixed workload (single-school solves, market solves, and one large
percentile-shape school) through each available backend, checks that the
certified outputs agree, and prints per-backend wall times.

Usage: python benchmarks/compare_backends.py [--trials N]
"""

import argparse
import time

from committee_match._kernels import available_backends
from committee_match.generators import AlphaMode, generate_instance
from committee_match.solve import solve_match, solve_single


def workload(trials):
    singles = [
        generate_instance((9001, t), 18, 1, 3, 5, AlphaMode("uniform"))
        for t in range(trials)
    ]
    markets = [
        generate_instance((9002, t), 16, 3, 2, 3, AlphaMode("uniform"))
        for t in range(max(1, trials // 2))
    ]
    big = generate_instance(9003, 440, 1, 8, 400, AlphaMode("percentile", 20))
    return singles, markets, big


def run(backend, singles, markets, big):
    results = {"singles": [], "markets": []}
    t0 = time.perf_counter()
    for inst in singles:
        r = solve_single(inst, backend=backend)
        results["singles"].append((r.selected, r.beta))
    t_single = time.perf_counter() - t0

    t0 = time.perf_counter()
    for inst in markets:
        r = solve_match(inst, backend=backend)
        results["markets"].append((r.matching.assignment, tuple(r.betas)))
    t_market = time.perf_counter() - t0

    t0 = time.perf_counter()
    r = solve_single(big, backend=backend)
    t_big = time.perf_counter() - t0
    results["big"] = (r.selected, r.beta)
    return results, (t_single, t_market, t_big)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=12)
    args = parser.parse_args()

    singles, markets, big = workload(args.trials)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    outputs = {}
    timings = {}
    for backend in backends:
        outputs[backend], timings[backend] = run(backend, singles, markets, big)
        ts, tm, tb = timings[backend]
        print(
            f"{backend:>9}: singles {ts:7.2f}s"
            f"  markets {tm:7.2f}s  percentile-shape {tb:6.2f}s"
        )

    if len(backends) == 2:
        a, b = backends
        agree = outputs[a] == outputs[b]
        print(f"certified outputs identical across backends: {agree}")
        total_a = sum(timings[a])
        total_b = sum(timings[b])
        slow, fast = max(total_a, total_b), min(total_a, total_b)
        print(f"speedup: {slow / fast:.1f}x")
        if not agree:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
