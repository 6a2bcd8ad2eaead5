"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from the ``LCIC_BACKEND``
environment variable (``numba`` or ``numpy``).  When unset, numba is used if
it imports cleanly.  Both implementations stay importable as ``numba_impl``
and ``numpy_impl`` so tests and benchmarks can compare them directly.
"""
import os

from . import _numpy as numpy_impl

__all__ = [
    "BACKEND",
    "build_alias",
    "jacobi_eigh",
    "kink_gradient",
    "knot_newton_terms",
    "numba_impl",
    "numpy_impl",
    "segment_mass",
    "segment_moments",
    "tridiag_solve",
]

try:
    from . import _numba as numba_impl
except ImportError:  # numba missing or broken
    numba_impl = None


def _select():
    wanted = os.environ.get("LCIC_BACKEND", "").strip().lower()
    if wanted not in ("", "numba", "numpy"):
        raise ValueError(f"LCIC_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    if wanted == "numpy" or numba_impl is None:
        if wanted == "numba":
            raise ImportError("LCIC_BACKEND=numba requested but numba is unavailable")
        return "numpy", numpy_impl
    return "numba", numba_impl


BACKEND, _impl = _select()

segment_moments = _impl.segment_moments
segment_mass = _impl.segment_mass
kink_gradient = _impl.kink_gradient
knot_newton_terms = _impl.knot_newton_terms
tridiag_solve = _impl.tridiag_solve
jacobi_eigh = _impl.jacobi_eigh
build_alias = _impl.build_alias
