#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs luma extraction, frame differencing, and block matching on synthetic
planes at the pipeline's working sizes, verifies both backends return
identical integers, and prints a timing table.

    python benchmarks/bench_kernels.py [--repeats 5]

The engine-wide selector is the VDCOOK_KERNELS env var (numba|numpy).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vdcook import kernels

CASES = (
    ("small clip 60f 128x72", (60, 72, 128)),
    ("medium clip 120f 128x72", (120, 72, 128)),
    ("dense plane 48f 180x320", (48, 180, 320)),
)


def _time(fn, repeats: int) -> float:
    fn()  # warm (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
    print(f"backends: {', '.join(backends)}   repeats: {args.repeats}\n")
    header = f"{'case':<28} {'kernel':<14} " + "".join(f"{b:>12}" for b in backends)
    print(header + f"{'speedup':>10}" if len(backends) == 2 else header)

    for label, shape in CASES:
        luma = rng.integers(0, 256, shape, dtype=np.uint8)
        frames = rng.integers(0, 256, shape + (3,), dtype=np.uint8)
        for kernel_name, data in (("luma_plane", frames),
                                  ("frame_diff_sums", luma),
                                  ("block_match", luma)):
            times = {}
            results = {}
            for backend in backends:
                kernels.set_backend(backend)
                if kernel_name == "luma_plane":
                    fn = lambda: kernels.luma_plane(data)
                elif kernel_name == "frame_diff_sums":
                    fn = lambda: kernels.frame_diff_sums(data)
                else:
                    fn = lambda: kernels.block_match_displacements(data)
                times[backend] = _time(fn, args.repeats)
                results[backend] = fn()
            if len(backends) == 2:
                a, b = results["numpy"], results["numba"]
                if isinstance(a, tuple):
                    same = all(np.array_equal(x, y) for x, y in zip(a, b))
                else:
                    same = np.array_equal(a, b)
                assert same, f"backend mismatch in {kernel_name} on {label}"
            row = f"{label:<28} {kernel_name:<14} " + "".join(
                f"{times[b] * 1000:>10.2f}ms" for b in backends)
            if len(backends) == 2:
                row += f"{times['numpy'] / times['numba']:>9.1f}x"
            print(row)
    print("\nbackend outputs verified identical" if len(backends) == 2 else "")


if __name__ == "__main__":
    main()
