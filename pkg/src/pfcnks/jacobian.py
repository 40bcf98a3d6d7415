"""Sparse Jacobian of the scheme residual with respect to the new state.

The residual at cell ``i`` is ``(a_i - b_i)/dt + sum_j W_ij A_j`` where ``W`` is
the negated discrete ``div(M grad)`` (offsets ``0`` and ``+-e`` per axis) and
``A`` is the discrete variational derivative.  Differentiating gives, per row,

    J[i, i+o] = [o == 0]/dt + sum_d W[i, i+d] (alpha * Lc[o-d] + [o == d] c'_{i+d}) + T[i, i+o]

with ``Lc`` the constant stencil of ``(1-g) I + 2 Lap + Lap^2``, ``alpha`` the
weight of the new state inside it, ``c'`` the derivative of the cubic term and
``T`` the part coming from the state dependence of the mobility (offsets ``0``
and ``+-e`` only).  Coefficients are computed densely per offset and scattered
into a precomputed CSR pattern.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .energy import ModelParams, Scheme, variational_derivative_padded
from .grid import HALO, Box, Grid, global_box, pad, padded_axis_map
from .operators import (MobilityKind, combine, compose, laplacian_stencil, mobility,
                        mobility_derivative, trim)


@dataclass
class SparseMatrix:
    """Square matrix in compressed-row form with sorted column indices."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return matvec(self, x)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    @classmethod
    def from_scipy(cls, a) -> "SparseMatrix":
        a = sp.csr_matrix(a)
        a.sort_indices()
        return cls(a.shape[0], a.indptr.astype(np.int64), a.indices.astype(np.int64),
                   a.data.astype(np.float64))


def matvec(a: SparseMatrix, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if x.shape[0] != a.n:
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has {x.shape[0]} entries")
    return kernels.csr_matvec(a.indptr, a.indices, a.data, x)


def stencil_offsets(ndim: int, radius: int = HALO) -> list[tuple[int, ...]]:
    """Integer offsets with L1 norm <= radius, ordered z, y, x lexicographically."""
    rng = range(-radius, radius + 1)
    offs = [o for o in itertools.product(rng, repeat=ndim) if sum(abs(v) for v in o) <= radius]
    return sorted(offs, key=lambda o: tuple(reversed(o)))


@dataclass(frozen=True)
class StencilPattern:
    """Value-independent CSR pattern of the Jacobian rows of a box.

    ``scatter[k, r]`` is the CSR slot receiving the coefficient of offset
    ``offsets[k]`` in row ``r``, or -1 when the coupling is dropped (zero face).
    Several offsets may share one slot where mirror halos fold back.
    """

    grid: Grid
    box: Box
    offsets: tuple[tuple[int, ...], ...]
    indptr: np.ndarray
    indices: np.ndarray
    scatter: np.ndarray
    # when every slot receives exactly one coefficient: slot -> flat coefficient index
    gather: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.box.ncells

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def fill(self, coef: np.ndarray) -> SparseMatrix:
        """Sum per-offset coefficients ``coef[k, ...]`` into CSR values."""
        coef = coef.reshape(len(self.offsets), -1)
        if self.gather is not None:
            return SparseMatrix(self.n, self.indptr, self.indices, coef.ravel()[self.gather])
        keep = self.scatter >= 0
        data = np.bincount(self.scatter[keep], weights=coef[keep], minlength=self.nnz)
        return SparseMatrix(self.n, self.indptr, self.indices, data)


def _axis_targets(grid: Grid, box: Box, axis: int) -> np.ndarray:
    """Local target coordinate for every (shift, local coordinate) pair, -1 if dropped."""
    index, valid = padded_axis_map(grid, box, axis, HALO)
    n, start, size = grid.counts[axis], box.start[axis], box.size[axis]
    local = np.mod(index - start, n)
    valid = valid & (local < size)
    out = np.full((2 * HALO + 1, size), -1, dtype=np.int64)
    for s in range(-HALO, HALO + 1):
        src = np.arange(size) + s + HALO
        out[s + HALO] = np.where(valid[src], local[src], -1)
    return out


@functools.lru_cache(maxsize=64)
def box_pattern(grid: Grid, box: Box) -> StencilPattern:
    offsets = stencil_offsets(grid.ndim)
    targets = [_axis_targets(grid, box, a) for a in range(grid.ndim)]
    ncell = box.ncells
    cols = np.empty((len(offsets), ncell), dtype=np.int64)
    for k, o in enumerate(offsets):
        col = np.zeros(box.shape, dtype=np.int64)
        ok = np.ones(box.shape, dtype=bool)
        stride = 1
        for axis in range(grid.ndim):
            t = targets[axis][o[axis] + HALO]
            shape = [1] * grid.ndim
            shape[grid.ndim - 1 - axis] = box.size[axis]
            t = t.reshape(shape)
            ok = ok & (t >= 0)
            col = col + t * stride
            stride *= box.size[axis]
        cols[k] = np.where(ok, col, -1).ravel()
    rows = np.broadcast_to(np.arange(ncell), cols.shape)
    keep = cols >= 0
    keys = rows[keep] * ncell + cols[keep]
    uniq, inverse = np.unique(keys, return_inverse=True)
    indices = (uniq % ncell).astype(np.int64)
    counts = np.bincount(uniq // ncell, minlength=ncell)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    scatter = np.full(cols.shape, -1, dtype=np.int64)
    scatter[keep] = inverse.ravel()
    gather = None
    if keep.all() and uniq.size == keys.size:
        gather = np.empty(uniq.size, dtype=np.int64)
        gather[scatter.ravel()] = np.arange(scatter.size)
        gather.setflags(write=False)
    for arr in (indptr, indices, scatter):
        arr.setflags(write=False)
    return StencilPattern(grid, box, tuple(offsets), indptr, indices, scatter, gather)


def jacobian_sparsity(grid: Grid, partition=None) -> StencilPattern:
    """Global pattern; rows are global cells in x-fastest order.

    The partition does not change the global pattern (each subdomain assembles
    its owned rows of the same matrix), so it is accepted only for symmetry
    with the rest of the interface.
    """
    return box_pattern(grid, global_box(grid))


def linear_stencil(spacing, gamma: float) -> dict:
    """Constant stencil of ``(1 - g) I + 2 Lap + Lap^2``."""
    lap = laplacian_stencil(spacing)
    ident = {(0,) * len(spacing): 1.0}
    return combine((1.0 - gamma, ident), (2.0, lap), (1.0, compose(lap, lap)))


def _shift(u: np.ndarray, r: int, offset) -> np.ndarray:
    """Interior view of width-``r`` padded ``u`` shifted by a mesh offset."""
    nd = u.ndim
    index = []
    for ax, n in enumerate(u.shape):
        s = offset[nd - 1 - ax]
        index.append(slice(r + s, n - r + s))
    return u[tuple(index)]


def stencil_coefficients(pn: np.ndarray, po: np.ndarray, dt: float, spacing,
                         params: ModelParams, offsets, frozen_mobility: bool = False) -> np.ndarray:
    """Jacobian coefficients per offset, shape ``(len(offsets),) + interior shape``.

    ``pn`` and ``po`` carry three halo layers.
    """
    if not dt > 0:
        raise ValueError(f"time step must be > 0, got {dt}")
    nd = pn.ndim
    dvd = params.scheme is Scheme.DVD
    alpha = 0.5 if dvd else 1.0
    beta = alpha
    zero = (0,) * nd

    a1, b1 = trim(pn, 2), trim(po, 2)
    m1 = 0.5 * (a1 + b1) if dvd else a1
    mob = mobility(m1, params.mobility)
    if dvd:
        cprime = (3.0 * a1 * a1 + 2.0 * a1 * b1 + b1 * b1) / 4.0
    else:
        cprime = 3.0 * a1 * a1

    # W[d] as arrays over the interior; d in {0, +-e}
    w: dict[tuple[int, ...], np.ndarray] = {}
    wdiag = None
    faces = []
    for axis in range(nd):
        e = tuple(1 if a == axis else 0 for a in range(nd))
        me = tuple(-v for v in e)
        h2 = spacing[axis] ** 2
        mc = _shift(mob, 1, zero)
        m_plus = 0.5 * (mc + _shift(mob, 1, e))
        m_minus = 0.5 * (mc + _shift(mob, 1, me))
        w[e] = -m_plus / h2
        w[me] = -m_minus / h2
        term = (m_plus + m_minus) / h2
        wdiag = term if wdiag is None else wdiag + term
        faces.append((e, me, h2))
    w = {zero: wdiag, **w}

    lc = linear_stencil(spacing, params.gamma)
    tterm: dict[tuple[int, ...], np.ndarray] = {}
    if params.mobility is not MobilityKind.CONSTANT and not frozen_mobility:
        chem = variational_derivative_padded(pn, po, spacing, params.gamma, params.scheme)
        dmob = beta * 0.5 * mobility_derivative(m1, params.mobility)
        ac = _shift(chem, 1, zero)
        tdiag = None
        for e, me, h2 in faces:
            da_plus = _shift(chem, 1, e) - ac
            da_minus = ac - _shift(chem, 1, me)
            term = _shift(dmob, 1, zero) * (da_minus - da_plus) / h2
            tdiag = term if tdiag is None else tdiag + term
            tterm[e] = -_shift(dmob, 1, e) * da_plus / h2
            tterm[me] = _shift(dmob, 1, me) * da_minus / h2
        tterm[zero] = tdiag

    shape = wdiag.shape
    coef = np.zeros((len(offsets),) + shape)
    for k, o in enumerate(offsets):
        acc = np.full(shape, 1.0 / dt) if o == zero else np.zeros(shape)
        for d, wd in w.items():
            c = lc.get(tuple(oi - di for oi, di in zip(o, d)))
            if c:
                acc = acc + (alpha * c) * wd
        if o in w:
            acc = acc + w[o] * _shift(cprime, 1, o)
        if o in tterm:
            acc = acc + tterm[o]
        coef[k] = acc
    return coef


def assemble_local(pn: np.ndarray, po: np.ndarray, dt: float, params: ModelParams,
                   pattern: StencilPattern, frozen_mobility: bool = False) -> SparseMatrix:
    """Jacobian rows of ``pattern.box`` from width-3 padded box data."""
    coef = stencil_coefficients(pn, po, dt, pattern.grid.spacings, params, pattern.offsets,
                                frozen_mobility)
    return pattern.fill(coef)


def assemble_jacobian(phi_new: np.ndarray, phi_old: np.ndarray, dt: float, grid: Grid,
                      params: ModelParams, pattern: StencilPattern | None = None,
                      frozen_mobility: bool = False) -> SparseMatrix:
    """Global Jacobian ``d r / d phi_new`` of the scheme residual."""
    pattern = pattern or jacobian_sparsity(grid)
    return assemble_local(pad(phi_new, grid), pad(phi_old, grid), dt, params, pattern,
                          frozen_mobility)
