# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sparse kernels: CSR products, level-of-fill ILU and triangular solves.

Index arrays are int64, values float64.  Semantics match ``_kernels_py``.
"""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t
from libc.stdlib cimport free, malloc, realloc

cnp.import_array()

BACKEND = "compiled"


def csr_matvec(const int64_t[::1] indptr, const int64_t[::1] indices,
               const double[::1] data, const double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef double acc
    y = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = y
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        yv[i] = acc
    return y


def iluk_symbolic(const int64_t[::1] indptr, const int64_t[::1] indices, int level):
    """Level-of-fill pattern of ILU(level); returns ``(indptr, indices, diag, levels)``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t cap = max(16, 2 * indices.shape[0])
    cdef Py_ssize_t nnz = 0
    cdef int64_t *out_idx = <int64_t *> malloc(cap * sizeof(int64_t))
    cdef int32_t *out_lev = <int32_t *> malloc(cap * sizeof(int32_t))
    cdef int64_t *nxt = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t *marker = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int32_t *lev = <int32_t *> malloc(n * sizeof(int32_t))
    cdef int64_t *tmp_idx
    cdef int32_t *tmp_lev
    if not (out_idx and out_lev and nxt and marker and lev):
        raise MemoryError()
    pindptr = np.empty(n + 1, dtype=np.int64)
    pdiag = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] ptr = pindptr
    cdef int64_t[::1] dg = pdiag
    cdef Py_ssize_t i, jj, kk, k, j, prev, cursor, head
    cdef int lik, nl
    cdef int64_t END = n
    try:
        for i in range(n):
            marker[i] = -1
        ptr[0] = 0
        for i in range(n):
            head = END
            prev = -1
            # row of A plus the diagonal, as a sorted linked list
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                if prev < i < j and marker[i] != i:
                    marker[i] = i
                    lev[i] = 0
                    if prev == -1:
                        head = i
                    else:
                        nxt[prev] = i
                    prev = i
                marker[j] = i
                lev[j] = 0
                if prev == -1:
                    head = j
                else:
                    nxt[prev] = j
                prev = j
            if marker[i] != i:
                marker[i] = i
                lev[i] = 0
                if prev == -1:
                    head = i
                else:
                    nxt[prev] = i
                prev = i
            nxt[prev] = END

            k = head
            while k < i:
                lik = lev[k]
                if lik < level:
                    cursor = k
                    for kk in range(dg[k] + 1, ptr[k + 1]):
                        j = out_idx[kk]
                        nl = lik + out_lev[kk] + 1
                        if nl > level:
                            continue
                        if marker[j] == i:
                            if nl < lev[j]:
                                lev[j] = nl
                            cursor = j
                        else:
                            while nxt[cursor] < j:
                                cursor = nxt[cursor]
                            nxt[j] = nxt[cursor]
                            nxt[cursor] = j
                            marker[j] = i
                            lev[j] = nl
                            cursor = j
                k = nxt[k]

            k = head
            while k != END:
                if nnz == cap:
                    cap *= 2
                    tmp_idx = <int64_t *> realloc(out_idx, cap * sizeof(int64_t))
                    if not tmp_idx:
                        raise MemoryError()
                    out_idx = tmp_idx
                    tmp_lev = <int32_t *> realloc(out_lev, cap * sizeof(int32_t))
                    if not tmp_lev:
                        raise MemoryError()
                    out_lev = tmp_lev
                if k == i:
                    dg[i] = nnz
                out_idx[nnz] = k
                out_lev[nnz] = lev[k]
                nnz += 1
                k = nxt[k]
            ptr[i + 1] = nnz

        pindices = np.empty(nnz, dtype=np.int64)
        plevels = np.empty(nnz, dtype=np.int32)
        for jj in range(nnz):
            pindices[jj] = out_idx[jj]
            plevels[jj] = out_lev[jj]
    finally:
        free(out_idx)
        free(out_lev)
        free(nxt)
        free(marker)
        free(lev)
    return pindptr, pindices, pdiag, plevels


def ilu_numeric(const int64_t[::1] a_indptr, const int64_t[::1] a_indices,
                const double[::1] a_data, const int64_t[::1] pindptr,
                const int64_t[::1] pindices, const int64_t[::1] pdiag):
    """IKJ incomplete factorisation restricted to a given pattern, no pivoting.

    Returns the combined ``L\\U`` values (unit lower part stored below the
    diagonal) aligned with ``pindices``; raises ``ZeroDivisionError`` naming
    the row on an exact zero pivot.
    """
    cdef Py_ssize_t n = pindptr.shape[0] - 1
    cdef Py_ssize_t nnz = pindices.shape[0]
    values = np.zeros(nnz, dtype=np.float64)
    cdef double[::1] lu = values
    work_arr = np.zeros(n, dtype=np.float64)
    mark_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] w = work_arr
    cdef int64_t[::1] inrow = mark_arr
    cdef Py_ssize_t i, p, q, k, j
    cdef double lik
    for i in range(n):
        for p in range(pindptr[i], pindptr[i + 1]):
            inrow[pindices[p]] = i
        for p in range(a_indptr[i], a_indptr[i + 1]):
            w[a_indices[p]] = a_data[p]
        for p in range(pindptr[i], pdiag[i]):
            k = pindices[p]
            lik = w[k] / lu[pdiag[k]]
            w[k] = lik
            for q in range(pdiag[k] + 1, pindptr[k + 1]):
                j = pindices[q]
                if inrow[j] == i:
                    w[j] -= lik * lu[q]
        for p in range(pindptr[i], pindptr[i + 1]):
            j = pindices[p]
            lu[p] = w[j]
            w[j] = 0.0
        if lu[pdiag[i]] == 0.0:
            raise ZeroDivisionError(f"zero pivot in incomplete factorisation at row {i}", int(i))
    return values


def ilu_solve(const int64_t[::1] pindptr, const int64_t[::1] pindices,
              const int64_t[::1] pdiag, const double[::1] lu, const double[::1] b):
    cdef Py_ssize_t n = pindptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef double acc
    x = np.empty(n, dtype=np.float64)
    cdef double[::1] y = x
    for i in range(n):
        acc = b[i]
        for p in range(pindptr[i], pdiag[i]):
            acc -= lu[p] * y[pindices[p]]
        y[i] = acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for p in range(pdiag[i] + 1, pindptr[i + 1]):
            acc -= lu[p] * y[pindices[p]]
        y[i] = acc / lu[pdiag[i]]
    return x
