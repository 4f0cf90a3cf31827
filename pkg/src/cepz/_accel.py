"""Numba/numpy kernel switch.

Hot kernels exist twice: a numba ``@njit`` version and a pure-numpy
version. Which one runs is decided per call by :func:`use_numba`, whose
default comes from the ``CEPZ_NUMBA`` environment variable (``0`` forces
the numpy path). Both paths must return bit-identical results.
"""

import functools
import os

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    _nb = None

_ENV_FLAG = "CEPZ_NUMBA"

HAVE_NUMBA = _nb is not None
_enabled = HAVE_NUMBA and os.environ.get(_ENV_FLAG, "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def use_numba() -> bool:
    return _enabled


def set_numba(flag: bool) -> bool:
    """Switch kernel path at runtime; returns the previous setting."""
    global _enabled
    prev = _enabled
    _enabled = bool(flag) and HAVE_NUMBA
    return prev


if HAVE_NUMBA:
    # cache=True would write next to the sources, which may be read-only
    njit = functools.partial(_nb.njit, cache=False, nogil=True)
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
