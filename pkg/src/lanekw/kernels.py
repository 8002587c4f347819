"""Kernel backend selection.

The Godunov interface-flux sweep is the simulator's hot loop. A compiled
Cython extension provides it when available; a vectorized numpy fallback
is always present and implements identical semantics. The default is
chosen at import (compiled if importable), overridable with the
LANEKW_KERNELS environment variable or per run() call.
"""

from __future__ import annotations

import os

from . import _kernels_py
from .fd import FundamentalDiagram, MaxSensitivityFD, TriangularFD

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

_BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    _BACKENDS["cython"] = _kernels_c

DEFAULT = os.environ.get("LANEKW_KERNELS", "").strip().lower() or (
    "cython" if _kernels_c is not None else "python")
if DEFAULT not in _BACKENDS:
    raise ImportError(
        f"LANEKW_KERNELS={DEFAULT!r} not available; have {sorted(_BACKENDS)}")


def available() -> list:
    return sorted(_BACKENDS)


def get(name: str | None = None):
    """Kernel module for the named backend (default: best available)."""
    if name is None or name == "auto":
        name = DEFAULT
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {sorted(_BACKENDS)}")


def fd_params(fd: FundamentalDiagram) -> tuple:
    """(kind, vf, rc0, cap0, rj, |c_j|) for the kernel calls."""
    if isinstance(fd, TriangularFD):
        return (_kernels_py.TRIANGULAR, fd.v_f, fd.rho_c,
                fd.v_f * fd.rho_c, fd.rho_j, 0.0)
    if isinstance(fd, MaxSensitivityFD):
        return (_kernels_py.MAX_SENSITIVITY, fd.v_f, fd._crit0,
                fd._cap0, fd.rho_j, -fd.c_j)
    raise TypeError(f"no kernel mapping for {type(fd).__name__}")
