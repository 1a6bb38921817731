"""Numba switch.

Hot kernels are compiled with numba when it is importable. Set
``HEAVYPOLY_NO_NUMBA=1`` in the environment (before import) to force the
pure-numpy fallbacks; both paths are kept numerically interchangeable.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "HEAVYPOLY_NO_NUMBA"


def numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not numba_disabled()


def optional_njit(*args, **kwargs):
    def decorator(func):
        if HAVE_NUMBA:
            return numba.njit(*args, **kwargs)(func)
        return func

    return decorator
