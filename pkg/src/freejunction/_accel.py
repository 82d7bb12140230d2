"""Kernel backend selection.

Hot mesh kernels exist twice: a numba ``@njit`` version and a vectorised
numpy version. Set ``FREEJUNCTION_NO_NUMBA=1`` to force the numpy path
(also used automatically when numba cannot be imported).
"""
import os

_flag = os.environ.get("FREEJUNCTION_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("numba disabled by FREEJUNCTION_NO_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
