"""Subdomain factorizations: level-of-fill ILU(k) and sparse LU with partial pivoting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .jacobian import SparseMatrix


class ZeroPivotError(ArithmeticError):
    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"zero pivot in incomplete factorisation at row {row}")


@dataclass(frozen=True)
class IluSymbolic:
    """Level-``k`` fill pattern of a matrix pattern; value independent."""

    level: int
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    diag: np.ndarray
    levels: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])


def ilu_symbolic(a: SparseMatrix, level: int) -> IluSymbolic:
    if level < 0:
        raise ValueError(f"fill level must be >= 0, got {level}")
    indptr, indices, diag, levels = kernels.iluk_symbolic(a.indptr, a.indices, level)
    return IluSymbolic(level, a.n, indptr, indices, diag, levels)


class ILUFactorization:
    """Incomplete LU without pivoting on the level-``k`` pattern."""

    kind = "ilu"

    def __init__(self, a: SparseMatrix, level: int = 0, symbolic: IluSymbolic | None = None):
        self.symbolic = symbolic if symbolic is not None else ilu_symbolic(a, level)
        self.level = self.symbolic.level
        s = self.symbolic
        try:
            self.values = kernels.ilu_numeric(a.indptr, a.indices, a.data, s.indptr, s.indices, s.diag)
        except ZeroDivisionError as exc:
            raise ZeroPivotError(exc.args[1]) from None

    @property
    def nnz(self) -> int:
        return self.symbolic.nnz

    def solve(self, b: np.ndarray) -> np.ndarray:
        s = self.symbolic
        return kernels.ilu_solve(s.indptr, s.indices, s.diag, self.values,
                                 np.ascontiguousarray(b, dtype=np.float64))

    def factors(self) -> tuple[SparseMatrix, SparseMatrix]:
        """Explicit unit-lower ``L`` and upper ``U`` (for tests)."""
        s = self.symbolic
        full = sp.csr_matrix((self.values, s.indices, s.indptr), shape=(s.n, s.n))
        lower = sp.tril(full, -1, format="csr") + sp.identity(s.n, format="csr")
        upper = sp.triu(full, 0, format="csr")
        return SparseMatrix.from_scipy(lower), SparseMatrix.from_scipy(upper)


class LUFactorization:
    """Sparse direct LU with partial (row) pivoting, COLAMD column ordering."""

    kind = "lu"

    def __init__(self, a: SparseMatrix):
        self._lu = spla.splu(a.to_scipy().tocsc(), permc_spec="COLAMD", diag_pivot_thresh=1.0)

    @property
    def nnz(self) -> int:
        return int(self._lu.L.nnz + self._lu.U.nnz)

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(b, dtype=np.float64))

    @property
    def lu(self):
        return self._lu


def factorize(a: SparseMatrix, solver: str, symbolic: IluSymbolic | None = None):
    """Factor ``a`` with ``solver`` in {"lu", "ilu0", "ilu1", "ilu2"}."""
    solver = solver.lower()
    if solver == "lu":
        return LUFactorization(a)
    if solver.startswith("ilu") and solver[3:].isdigit():
        return ILUFactorization(a, int(solver[3:]), symbolic)
    raise ValueError(f"unknown subdomain solver {solver!r}")
