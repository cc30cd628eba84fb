"""Numba acceleration switch.

Hot kernels are written twice: a numba ``@njit`` loop version and a
vectorised numpy version.  Which one is dispatched is decided once at
import time:

* numba must be importable, and
* the environment variable ``LARPCESK_DISABLE_NUMBA`` must be unset or
  falsy (``0``, ``false``, ``no``, empty).

Both paths are always importable so tests and the benchmark script can
compare them directly.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _flag_disabled():
    return os.environ.get("LARPCESK_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _flag_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
