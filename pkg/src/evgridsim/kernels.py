"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when
``EVGRIDSIM_PURE=1`` is set, the numpy implementation is used.
"""
import os

from . import _kernels_py
from ._kernels_py import (  # noqa: F401
    ACT_AWAY,
    ACT_FALLBACK,
    ACT_IDLE,
    ACT_SCHEDULED,
    CONTINUOUS,
    INACTIVE,
    SCHEDULED,
)

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("EVGRIDSIM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

select_cheapest = _impl.select_cheapest
charge_hour = _impl.charge_hour


def get_backend(name: str):
    """Module implementing the kernels for ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
