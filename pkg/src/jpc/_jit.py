"""Optional numba acceleration.

Set ``JPC_DISABLE_JIT=1`` to run the pure-numpy kernels instead, e.g. for
debugging or on platforms without numba.
"""

import os

JIT_REQUESTED = os.environ.get("JPC_DISABLE_JIT", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(func=None, **kwargs):
        if func is not None:
            return func
        return lambda f: f


USE_JIT = JIT_REQUESTED and HAS_NUMBA
