#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels (axis convolution, oblique shear convolution,
anti-diagonal slice reduction) at flow-realistic sizes and checks that both
backends agree numerically.

Usage:
    python benchmarks/benchmark_kernels.py [--n N] [--kernel-width K] [--iters I]

The package-level backend selection is orthogonal: this script always calls
both implementations directly.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from epi_lab import _kernels


def make_inputs(n: int, kw: int, rng: np.random.Generator):
    x = np.linspace(-8, 8, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    p = np.exp(-0.5 * (X**2 + 0.5 * X * Y + Y**2))
    p /= p.sum()
    u = np.linspace(-4, 4, kw)
    w = np.exp(-0.5 * u * u)
    w /= w.sum()
    shifts = rng.uniform(-3, 3, size=kw)
    wx = np.full(n, 16.0 / (n - 1))
    return p, w, shifts, wx


def bench(fn, args, iters):
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return out, min(times)


def main():
    parser = argparse.ArgumentParser(description="kernel backend benchmark")
    parser.add_argument("--n", type=int, default=512, help="grid points per axis")
    parser.add_argument("--kernel-width", type=int, default=257,
                        help="convolution kernel taps")
    parser.add_argument("--iters", type=int, default=5,
                        help="timing repetitions (min is reported)")
    args = parser.parse_args()

    if not _kernels.USING_NUMBA:
        import importlib
        import os

        os.environ["EPI_LAB_BACKEND"] = "auto"
        importlib.reload(_kernels)
    if not _kernels.USING_NUMBA:
        print("numba is not importable; only the numpy path can run")
        return

    rng = np.random.default_rng(42)
    p, w, shifts, wx = make_inputs(args.n, args.kernel_width, rng)
    tks = np.floor(shifts).astype(np.int64)
    aks = shifts - tks
    nw = 2 * args.n - 1

    cases = [
        ("convolve_axis0",
         _kernels.convolve_axis0_numpy, (p, w),
         _kernels._convolve_axis0_numba, (p, w)),
        ("shear_convolve",
         _kernels.shear_convolve_numpy, (p, w, tks, aks),
         _kernels._shear_convolve_numba, (p, w, tks, aks)),
        ("slice_reduce",
         _kernels.slice_reduce_numpy, (p, wx, 1.0, 1.0, nw),
         _kernels._slice_reduce_numba, (p, wx, 1.0, 1.0, nw)),
    ]

    print(f"grid {args.n}x{args.n}, kernel width {args.kernel_width}, "
          f"best of {args.iters}")
    print(f"{'kernel':<18} {'numpy (ms)':>12} {'numba (ms)':>12} "
          f"{'speedup':>9} {'max |diff|':>12}")
    print("-" * 68)
    for name, f_np, a_np, f_nb, a_nb in cases:
        f_nb(*a_nb)  # JIT warmup outside the timed region
        out_np, t_np = bench(f_np, a_np, args.iters)
        out_nb, t_nb = bench(f_nb, a_nb, args.iters)
        diff = float(np.max(np.abs(out_np - out_nb)))
        print(f"{name:<18} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
              f"{t_np / t_nb:>8.1f}x {diff:>12.2e}")
        assert diff < 1e-12, f"{name}: backends disagree"
    print("backends agree on all kernels")


if __name__ == "__main__":
    main()
