#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The two backends are selected via the OTFDM_KERNELS environment variable
at import time, so this script imports both implementation modules
directly instead of going through the package switch.

Usage: python benchmarks/bench_kernels.py [--rows N] [--cols N]
"""

import argparse
import time

import numpy as np

from otfdm.kernels import _numpy as knp

try:
    from otfdm.kernels import _numba as knb
except ImportError:
    knb = None


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up / JIT
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=256)
    ap.add_argument("--cols", type=int, default=16384)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x64 = (rng.standard_normal((args.rows, args.cols))
           + 1j * rng.standard_normal((args.rows, args.cols))).astype(np.complex64)
    x128 = x64.astype(np.complex128)

    n_taps_max = 13
    sig = (rng.standard_normal((args.rows, 4384))
           + 1j * rng.standard_normal((args.rows, 4384)))
    delays = np.sort(rng.integers(0, 64, size=(args.rows, n_taps_max)), axis=1).astype(np.int64)
    gains = (rng.standard_normal((args.rows, n_taps_max))
             + 1j * rng.standard_normal((args.rows, n_taps_max)))
    counts = np.full(args.rows, n_taps_max, dtype=np.int64)

    cases = [
        ("papr_row_stats c64", lambda k: k.papr_row_stats, (x64,)),
        ("papr_row_stats c128", lambda k: k.papr_row_stats, (x128,)),
        ("tap_convolve_rows", lambda k: k.tap_convolve_rows, (sig, delays, gains, counts)),
    ]

    print(f"{'kernel':24s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, get, data in cases:
        t_np = _time(get(knp), *data)
        if knb is None:
            print(f"{name:24s} {t_np * 1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_nb = _time(get(knb), *data)
        print(f"{name:24s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")

        ref = get(knp)(*data)
        out = get(knb)(*data)
        ref = ref if isinstance(ref, tuple) else (ref,)
        out = out if isinstance(out, tuple) else (out,)
        for r, o in zip(ref, out):
            np.testing.assert_allclose(o, r, rtol=1e-6, atol=1e-9)


if __name__ == "__main__":
    main()
