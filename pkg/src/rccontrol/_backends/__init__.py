"""Compute-kernel backend selection.

The default backend compiles the hot loops with numba.  Setting the
environment variable ``RCCONTROL_BACKEND=numpy`` before import forces the
pure-NumPy fallback; ``RCCONTROL_BACKEND=numba`` makes a missing numba an
error instead of a silent fallback.  ``benchmarks/bench_backends.py``
compares the two.
"""

import os

_requested = os.environ.get("RCCONTROL_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"RCCONTROL_BACKEND={_requested!r} not recognized; use 'numba' or 'numpy'"
    )

if _requested == "numpy":
    from . import numpy_backend as _impl

    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import numpy_backend as _impl

        BACKEND = "numpy"

LORENZ = _impl.LORENZ
ROESSLER = _impl.ROESSLER
DIVERGENCE_LIMIT = _impl.DIVERGENCE_LIMIT
integrate_sys = _impl.integrate_sys
drive_loop = _impl.drive_loop
predict_loop = _impl.predict_loop
controlled_loop = _impl.controlled_loop
rosenstein_curve = _impl.rosenstein_curve
corr_counts = _impl.corr_counts
