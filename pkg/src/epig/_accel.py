"""Switch between numba-compiled kernels and their pure-numpy twins.

Set ``EPIG_DISABLE_NUMBA=1`` to force the numpy path (also used when numba
is not importable).  The choice is made once, at import time.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("EPIG_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op decorator without numba."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def select(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
