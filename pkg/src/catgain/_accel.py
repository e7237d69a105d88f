"""Backend selection for the hot numeric kernels.

The kernels in :mod:`catgain.kernels` are written as plain numpy functions and
JIT-compiled with numba by default.  Set ``CATGAIN_NUMBA=0`` (or install
without numba) to run the identical source as pure numpy instead.
"""

import os


def _numba_requested() -> bool:
    flag = os.environ.get("CATGAIN_NUMBA", "1").strip().lower()
    return flag not in ("0", "off", "false", "no")


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested() and _numba_available()


def jit(func):
    """Compile ``func`` with numba when the backend is enabled, else return it unchanged."""
    if NUMBA_ENABLED:
        from numba import njit

        return njit(cache=True)(func)
    return func


def pure(func):
    """Return the uncompiled python implementation of a (possibly jitted) kernel."""
    return getattr(func, "py_func", func)
