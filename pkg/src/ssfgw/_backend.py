"""Kernel backend selection.

The hot 1D fused Gromov-Wasserstein kernels exist in two builds: numba
``@njit`` loops and vectorized pure numpy. The active build is chosen once at
import time: setting the environment variable ``SSFGW_NO_NUMBA`` to 1/true/yes
forces the numpy build, and a missing numba install falls back to it silently.
Both builds remain importable regardless of the switch so they can be
cross-checked and benchmarked against each other (see ``benchmarks/``).
"""

from __future__ import annotations

import os


def _env_disabled() -> bool:
    flag = os.environ.get("SSFGW_NO_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes", "on"}


try:
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    _numba_njit = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not _env_disabled()


def njit(*args, **kwargs):
    """numba.njit when numba is installed, a no-op decorator otherwise.

    The no-op branch keeps the loop implementations importable (and testable,
    slowly) in environments without numba; dispatch in ``_kernels`` never
    selects them there.
    """
    if _numba_njit is not None:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def backend_name() -> str:
    """Name of the active kernel build: 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"
