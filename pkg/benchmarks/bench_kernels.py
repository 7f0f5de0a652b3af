#!/usr/bin/env python3
"""Compare the numba and numpy backends on the hot kernels.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --radius 10 --walkers 50000 --repeats 5
    python3 benchmarks/bench_kernels.py --output bench.json
"""
import argparse
import json
import time

import numpy as np

from kesten import _kernels
from kesten.graphs import cayley_ball
from kesten.stallings import fold
from kesten.words import SubgroupSpec


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=9, help="Cayley ball radius for F_2")
    ap.add_argument("--walkers", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--output", help="write results as JSON")
    args = ap.parse_args()

    if not _kernels.NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return

    g = cayley_ball(2, args.radius)
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 1000, g.n_vertices).astype(np.int64)
    f = rng.random(g.n_vertices)
    A = fold(SubgroupSpec.parse(2, "aa,bb"))
    table = np.array(A.table, dtype=np.int64).reshape(A.n_states, 4)
    flags = np.ones(A.n_states, dtype=np.uint8)
    choices = rng.integers(0, 4, size=(args.walkers, args.steps))

    cases = {
        "gather_sum int64": lambda b: _kernels.gather_sum(g.targets, counts, b),
        "markov_apply float64": lambda b: _kernels.markov_apply(g.targets, f, 4, b),
        "walk_schreier": lambda b: _kernels.walk_schreier(table, flags, choices, b),
    }
    # first call compiles (or loads the cache)
    for fn in cases.values():
        fn("numba")

    print(f"F_2 ball radius {args.radius}: {g.n_vertices} vertices; "
          f"{args.walkers} walkers x {args.steps} steps; best of {args.repeats}")
    print(f"{'kernel':<24}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    results = {}
    for name, fn in cases.items():
        t_np = best_of(lambda: fn("numpy"), args.repeats)
        t_nb = best_of(lambda: fn("numba"), args.repeats)
        same = np.array_equal(fn("numpy"), fn("numba"))
        results[name] = {"numpy": t_np, "numba": t_nb, "identical": bool(same)}
        print(f"{name:<24}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x" + ("" if same else "  MISMATCH"))

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"config": vars(args), "results": results}, fh, indent=2)


if __name__ == "__main__":
    main()
