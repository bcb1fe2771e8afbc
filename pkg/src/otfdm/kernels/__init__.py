"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles the inner loops; the numpy backend is a pure
vectorized fallback. Selection is controlled by the ``OTFDM_KERNELS``
environment variable:

* ``auto`` (default): numba if importable, else numpy
* ``numba``: require numba, raise if unavailable
* ``numpy``: force the fallback

Both backends are deterministic run-to-run; they may differ from each other
in the last floating-point ulps (different accumulation code paths).
"""

import os

_choice = os.environ.get("OTFDM_KERNELS", "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"OTFDM_KERNELS must be one of auto/numba/numpy, got {_choice!r}"
    )

if _choice == "numpy":
    from . import _numpy as _impl
elif _choice == "numba":
    from . import _numba as _impl
else:
    try:
        from . import _numba as _impl
    except ImportError:
        from . import _numpy as _impl

papr_row_stats = _impl.papr_row_stats
tap_convolve_rows = _impl.tap_convolve_rows


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return _impl.BACKEND


__all__ = ["papr_row_stats", "tap_convolve_rows", "active_backend"]
