"""JIT toggle for the hot kernels.

Set ``BOOSTED_GLMB_NO_NUMBA=1`` (or have numba missing) to route every kernel
through its vectorized numpy implementation instead of the compiled loop.
"""
import os

_DISABLE = os.environ.get("BOOSTED_GLMB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, else a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def select(jitted, fallback):
    return jitted if HAVE_NUMBA else fallback
