"""Numba-compiled implementations of the hot kernels.

Single-threaded on purpose: results must not depend on worker count, and
the callers already parallelize at chunk level.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True, nogil=True)
def papr_row_stats(x):
    n_rows, n = x.shape
    peak = np.empty(n_rows, dtype=np.float64)
    sumsq = np.empty(n_rows, dtype=np.float64)
    for i in range(n_rows):
        p = 0.0
        s = 0.0
        for j in range(n):
            v = x[i, j]
            re = np.float64(v.real)
            im = np.float64(v.imag)
            m = re * re + im * im
            s += m
            if m > p:
                p = m
        peak[i] = p
        sumsq[i] = s
    return peak, sumsq


@njit(cache=True, nogil=True)
def tap_convolve_rows(x, delays, gains, n_taps):
    y = np.zeros_like(x)
    n_rows, n = x.shape
    for i in range(n_rows):
        for k in range(n_taps[i]):
            d = delays[i, k]
            if d < n:
                g = gains[i, k]
                for t in range(d, n):
                    y[i, t] += g * x[i, t - d]
    return y
