"""Backend selection for the numeric kernels.

Set ``WEALTHDYN_BACKEND=numpy`` to bypass numba entirely; the default
(``numba``) silently falls back to numpy when numba is not importable.
"""

from __future__ import annotations

import os

_requested = os.environ.get("WEALTHDYN_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"WEALTHDYN_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, else an identity decorator.

    The compiled kernels are always built when numba is installed so the
    benchmark can compare both paths in one process; ``USE_NUMBA`` only
    decides which one the public API dispatches to.
    """
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
