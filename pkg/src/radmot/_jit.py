"""Optional numba acceleration.

Set ``RADMOT_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy. The decorated functions keep their interpreted form reachable
through ``.py_func`` either way, so tests can compare both paths.
"""
import os

_FALSEY = {"", "0", "false", "no", "off"}

NUMBA_REQUESTED = os.environ.get("RADMOT_DISABLE_NUMBA", "0").strip().lower() in _FALSEY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = NUMBA_REQUESTED and numba is not None


def njit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
