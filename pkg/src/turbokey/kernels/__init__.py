"""Per-trial Monte Carlo kernels.

Two interchangeable implementations exist: ``numba_impl`` (compiled loops)
and ``numpy_impl`` (vectorised numpy). The compiled one is active when numba
imports and ``TURBOKEY_DISABLE_NUMBA`` is unset or ``0``; both stay
reachable through :func:`get` for comparison.
"""
import os

from . import numpy_impl

_disabled = os.environ.get("TURBOKEY_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

BACKENDS = {"numpy": numpy_impl}
try:
    from . import numba_impl as _compiled
except ImportError:  # numba missing or broken
    pass
else:
    BACKENDS["numba"] = _compiled

BACKEND = "numpy" if _disabled or "numba" not in BACKENDS else "numba"
active = BACKENDS[BACKEND]


def get(name=None):
    """Kernel module by name, or the active one."""
    if name is None:
        return active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
