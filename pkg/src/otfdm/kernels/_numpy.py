"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np

BACKEND = "numpy"


def papr_row_stats(x):
    """Per-row peak and total instantaneous power of a complex 2-D array.

    Returns (peak, sumsq) as float64 arrays of length x.shape[0], where
    peak[i] = max_j |x[i,j]|^2 and sumsq[i] = sum_j |x[i,j]|^2.
    """
    p = (x.real.astype(np.float64)) ** 2 + (x.imag.astype(np.float64)) ** 2
    return p.max(axis=1), p.sum(axis=1)


def tap_convolve_rows(x, delays, gains, n_taps):
    """Per-row sparse tap-line convolution, truncated to the input length.

    x: (rows, n) complex; delays: (rows, max_taps) int64; gains: (rows,
    max_taps) complex; n_taps: (rows,) tap count per row. Row i gets
    y[i, t] = sum_k gains[i, k] * x[i, t - delays[i, k]].
    """
    y = np.zeros_like(x)
    n = x.shape[1]
    for i in range(x.shape[0]):
        for k in range(n_taps[i]):
            d = delays[i, k]
            if d < n:
                y[i, d:] += gains[i, k] * x[i, : n - d]
    return y
