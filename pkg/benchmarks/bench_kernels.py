#!/usr/bin/env python3
"""Time the jit-compiled kernels against their numpy fallbacks.

Both variants are importable regardless of the AOA_NUMBA setting; the flag
only picks which one the package binds to. Workload shapes mirror how the
package actually calls each kernel: PSO-sized cost batches, full-resolution
ray and disc stamping, and component labeling of a dense mask.
"""

import argparse
import statistics
import time

import numpy as np

from aoaloc import kernels


def time_fn(fn, reps: int, warmup: int = 1) -> tuple[float, float]:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e3)
    return statistics.fmean(samples), statistics.pstdev(samples)


def build_cases():
    rng = np.random.default_rng(0)
    cand = rng.uniform(-1e5, 1e5, (400, 2))
    plat = rng.uniform(-1e5, 1e5, (101, 2))
    theta = rng.uniform(-np.pi, np.pi, 101)
    cx, cy = np.ascontiguousarray(cand[:, 0]), np.ascontiguousarray(cand[:, 1])
    px, py = np.ascontiguousarray(plat[:, 0]), np.ascontiguousarray(plat[:, 1])

    canvas = np.zeros((800, 800), dtype=np.uint8)
    drow, dcol = -np.sin(0.7), np.cos(0.7)
    mask = (rng.random((256, 256)) < 0.4).astype(np.uint8)

    def case(name, jit_name, numpy_name, args):
        variants = {"numpy": getattr(kernels, numpy_name)}
        if kernels.HAVE_NUMBA:
            variants["numba"] = getattr(kernels, jit_name)
        return name, variants, args

    return [
        case(
            "ml_cost_batch (400x101)",
            "ml_cost_batch_jit",
            "ml_cost_batch_numpy",
            (cx, cy, px, py, theta),
        ),
        case(
            "stamp_ray (800x800)",
            "stamp_ray_jit",
            "stamp_ray_numpy",
            (canvas, 400.3, 400.7, drow, dcol),
        ),
        case(
            "stamp_disc (r=3)",
            "stamp_disc_jit",
            "stamp_disc_numpy",
            (canvas, 400, 400, 3),
        ),
        case(
            "label_components (256x256)",
            "label_components_jit",
            "label_components_numpy",
            (mask, 8),
        ),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=50, help="timed calls per variant")
    args = parser.parse_args()
    if args.reps < 1:
        parser.error("--reps must be >= 1")

    if not kernels.HAVE_NUMBA:
        print("numba is not installed; timing the numpy fallbacks only")
    print(f"{'kernel':<28} {'variant':<7} {'mean_ms':>10} {'std_ms':>10}  reps={args.reps}")
    for name, variants, call_args in build_cases():
        baseline = None
        for variant, fn in variants.items():
            mean, std = time_fn(lambda: fn(*call_args), args.reps)
            note = ""
            if variant == "numpy":
                baseline = mean
            elif baseline:
                note = f"  ({baseline / mean:.1f}x vs numpy)"
            print(f"{name:<28} {variant:<7} {mean:>10.4f} {std:>10.4f}{note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
