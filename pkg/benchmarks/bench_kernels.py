#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels (character Levenshtein, LCS length, alignment
crossing count) on synthetic workloads shaped like the real pipeline:
short name-length strings hit many times, as the permutation search does.

    python benchmarks/bench_kernels.py [--pairs N] [--length L] [--repeat R]

The package-level backend is chosen by WDNAMES_NO_NUMBA; this script always
builds both backends explicitly, so the flag does not affect it.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from wdnames._kernels import codepoints, numba_backend, numpy_backend


def make_string_pairs(n: int, length: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = random.Random(seed)
    alphabet = "abcdefghij клмноп "
    pairs = []
    for _ in range(n):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(length // 2, length)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(length // 2, length)))
        pairs.append((codepoints(a), codepoints(b)))
    return pairs


def make_alignments(n: int, tokens: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = random.Random(seed)
    graphs = []
    for _ in range(n):
        perm = list(range(tokens))
        rng.shuffle(perm)
        src = np.arange(tokens, dtype=np.int64)
        tgt = np.array(perm, dtype=np.int64)
        graphs.append((src, tgt))
    return graphs


def time_kernel(fn, inputs, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for args in inputs:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=3000, help="string pairs per kernel run")
    parser.add_argument("--length", type=int, default=24, help="max string length")
    parser.add_argument("--repeat", type=int, default=3, help="timed repetitions (best of)")
    args = parser.parse_args()

    pairs = make_string_pairs(args.pairs, args.length, seed=7)
    alignments = make_alignments(args.pairs, 8, seed=8)

    backends = [numpy_backend()]
    try:
        compile_start = time.perf_counter()
        nb = numba_backend()
        nb.levenshtein(*pairs[0])
        nb.lcs_length(*pairs[0])
        nb.crossing_count(*alignments[0])
        compile_time = time.perf_counter() - compile_start
        backends.append(nb)
        print(f"numba JIT compile/warm-up: {compile_time:.2f}s (excluded from timings)")
    except ImportError:
        print("numba is not importable; timing the numpy backend only")

    workloads = [
        ("levenshtein", "levenshtein", pairs),
        ("lcs_length", "lcs_length", pairs),
        ("crossing_count", "crossing_count", alignments),
    ]
    print(f"\n{args.pairs} calls per run, best of {args.repeat} runs\n")
    header = f"{'kernel':<16}" + "".join(f"{b.name:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, attr, inputs in workloads:
        times = [time_kernel(getattr(b, attr), inputs, args.repeat) for b in backends]
        row = f"{label:<16}" + "".join(f"{t * 1000:>10.1f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
