"""Backend selection for the hot kernels.

Set ``CERTMARK_DISABLE_NUMBA=1`` to force the pure-numpy path. When numba is
missing the numpy path is used automatically.
"""
import os

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_FLAG = os.environ.get("CERTMARK_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(func):
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
