"""Kernel backend selection.

The environment variable FOLDSURF_BACKEND picks the implementation of
the hot kernels: "numba" (default when numba imports) or "numpy" (the
pure fallback).  Import `kernels` from here; its BACKEND attribute
names the active path.
"""

import os

from . import _kernels_numpy

_CHOICE = os.environ.get("FOLDSURF_BACKEND", "").strip().lower()

if _CHOICE not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"FOLDSURF_BACKEND={_CHOICE!r}: expected 'numba' or 'numpy'"
    )

kernels = None

if _CHOICE in ("", "numba"):
    try:
        from . import _kernels_numba as kernels
    except ImportError:
        if _CHOICE == "numba":
            raise RuntimeError("FOLDSURF_BACKEND=numba but numba will not import")
        kernels = None

if kernels is None:
    kernels = _kernels_numpy


def backend_name():
    return kernels.BACKEND


def available_backends():
    names = ["numpy"]
    try:
        from . import _kernels_numba  # noqa: F401
        names.insert(0, "numba")
    except ImportError:
        pass
    return names
