"""Pure-Python/numpy fallback for the compiled sparse kernels.

Same algorithms and the same results as ``_kernels``: the matvec and the
triangular solves accumulate each row left to right, so both backends agree
to the last bit.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    x = np.asarray(x, dtype=np.float64)
    prod = data * x[indices]
    y = np.zeros(n)
    lengths = np.diff(indptr)
    # column-by-column sweep keeps left-to-right accumulation within each row
    for k in range(int(lengths.max(initial=0))):
        rows = np.nonzero(lengths > k)[0]
        y[rows] += prod[indptr[rows] + k]
    return y


def iluk_symbolic(indptr, indices, level):
    n = len(indptr) - 1
    rows_idx: list[np.ndarray] = []
    rows_lev: list[np.ndarray] = []
    diag = np.empty(n, dtype=np.int64)
    out_ptr = np.zeros(n + 1, dtype=np.int64)
    udiag: list[int] = []
    for i in range(n):
        lev = {int(j): 0 for j in indices[indptr[i]:indptr[i + 1]]}
        lev.setdefault(i, 0)
        done = set()
        while True:
            pending = [k for k in lev if k < i and k not in done]
            if not pending:
                break
            k = min(pending)
            done.add(k)
            lik = lev[k]
            if lik >= level:
                continue
            cols, levs = rows_idx[k], rows_lev[k]
            for p in range(udiag[k] + 1, len(cols)):
                nl = lik + int(levs[p]) + 1
                if nl <= level:
                    j = int(cols[p])
                    if j not in lev or nl < lev[j]:
                        lev[j] = nl
        cols = np.array(sorted(lev), dtype=np.int64)
        rows_idx.append(cols)
        rows_lev.append(np.array([lev[int(j)] for j in cols], dtype=np.int32))
        d = int(np.searchsorted(cols, i))
        udiag.append(d)
        diag[i] = out_ptr[i] + d
        out_ptr[i + 1] = out_ptr[i] + len(cols)
    pindices = np.concatenate(rows_idx) if n else np.zeros(0, dtype=np.int64)
    plevels = np.concatenate(rows_lev) if n else np.zeros(0, dtype=np.int32)
    return out_ptr, pindices, diag, plevels


def ilu_numeric(a_indptr, a_indices, a_data, pindptr, pindices, pdiag):
    n = len(pindptr) - 1
    lu = np.zeros(len(pindices))
    w = np.zeros(n)
    inrow = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        lo, hi, d = pindptr[i], pindptr[i + 1], pdiag[i]
        inrow[pindices[lo:hi]] = i
        w[a_indices[a_indptr[i]:a_indptr[i + 1]]] = a_data[a_indptr[i]:a_indptr[i + 1]]
        for p in range(lo, d):
            k = pindices[p]
            lik = w[k] / lu[pdiag[k]]
            w[k] = lik
            q = np.arange(pdiag[k] + 1, pindptr[k + 1])
            cols = pindices[q]
            keep = inrow[cols] == i
            # distinct columns, so the fancy-index update is exact
            w[cols[keep]] -= lik * lu[q[keep]]
        cols = pindices[lo:hi]
        lu[lo:hi] = w[cols]
        w[cols] = 0.0
        if lu[d] == 0.0:
            raise ZeroDivisionError(f"zero pivot in incomplete factorisation at row {i}", int(i))
    return lu


def ilu_solve(pindptr, pindices, pdiag, lu, b):
    n = len(pindptr) - 1
    y = np.array(b, dtype=np.float64)
    for i in range(n):
        acc = y[i]
        for p in range(pindptr[i], pdiag[i]):
            acc -= lu[p] * y[pindices[p]]
        y[i] = acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for p in range(pdiag[i] + 1, pindptr[i + 1]):
            acc -= lu[p] * y[pindices[p]]
        y[i] = acc / lu[pdiag[i]]
    return y
