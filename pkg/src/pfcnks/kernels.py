"""Backend selection for the sparse kernels.

The compiled extension is used when it imports; set ``PFCNKS_BACKEND=python``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py


def _load(name: str | None = None):
    choice = (name or os.environ.get("PFCNKS_BACKEND", "auto")).strip().lower()
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        if choice == "compiled":
            raise
        return _kernels_py
    return _kernels


backend = _load()
BACKEND = backend.BACKEND


def get_backend(name: str):
    """Kernel module by name: ``"python"`` or ``"compiled"``."""
    return _load(name)


def csr_matvec(indptr, indices, data, x):
    return backend.csr_matvec(indptr, indices, data, x)


def iluk_symbolic(indptr, indices, level: int):
    return backend.iluk_symbolic(indptr, indices, int(level))


def ilu_numeric(a_indptr, a_indices, a_data, pindptr, pindices, pdiag):
    return backend.ilu_numeric(a_indptr, a_indices, a_data, pindptr, pindices, pdiag)


def ilu_solve(pindptr, pindices, pdiag, lu, b):
    return backend.ilu_solve(pindptr, pindices, pdiag, lu, b)
