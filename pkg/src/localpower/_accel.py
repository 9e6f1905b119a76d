"""JIT switch.

Set ``LOCALPOWER_DISABLE_JIT=1`` before import to force the pure-numpy
kernels (useful for debugging and for the benchmark's baseline run).
"""
import os

_DISABLED = os.environ.get("LOCALPOWER_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_JIT = NUMBA_AVAILABLE and not _DISABLED
BACKEND = "numba" if USE_JIT else "numpy"
