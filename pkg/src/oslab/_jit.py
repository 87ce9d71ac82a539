"""Numba switch for the hot kernels.

Set ``OSLAB_DISABLE_NUMBA=1`` to run every kernel through the interpreter /
vectorised numpy path instead of the compiled one.
"""

import os

DISABLED = os.environ.get("OSLAB_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise.

    The undecorated function stays reachable as ``.py_func`` in both modes so
    parity tests can run the interpreted path without touching the env flag.
    """

    def wrap(f):
        if not USE_NUMBA:
            f.py_func = f
            return f
        opts = {"cache": True}
        opts.update(kwargs)
        return numba.njit(**opts)(f)

    if func is not None:
        return wrap(func)
    return wrap
