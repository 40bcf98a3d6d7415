"""Finite-difference operators on halo-padded arrays.

Every operator takes an array carrying ``w`` halo layers on every face and
returns an array with ``w - r`` layers, ``r`` being the stencil radius (1 for
first and second differences, 2 for the biharmonic).  ``spacing`` is ordered by
mesh axis (x first).
"""
from __future__ import annotations

import enum
import itertools
from typing import Sequence

import numpy as np


class MobilityKind(str, enum.Enum):
    CONSTANT = "constant"
    ONE_MINUS_PHI_SQUARED = "one_minus_phi_squared"

    @classmethod
    def parse(cls, value) -> "MobilityKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace(" ", "")
        aliases = {"constant": cls.CONSTANT, "1": cls.CONSTANT, "one": cls.CONSTANT,
                   "one_minus_phi_squared": cls.ONE_MINUS_PHI_SQUARED,
                   "1-phi^2": cls.ONE_MINUS_PHI_SQUARED, "1-phi2": cls.ONE_MINUS_PHI_SQUARED,
                   "variable": cls.ONE_MINUS_PHI_SQUARED}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown mobility {value!r}") from None


class MobilityDomainError(ValueError):
    """Raised when ``M = 1 - phi^2`` is evaluated where ``|phi| >= 1``."""


def mobility(phi: np.ndarray, kind: MobilityKind) -> np.ndarray:
    if kind is MobilityKind.CONSTANT:
        return np.ones_like(phi)
    bad = np.abs(phi) >= 1.0
    if bad.any():
        raise MobilityDomainError(
            f"mobility 1 - phi^2 needs |phi| < 1; max |phi| = {float(np.abs(phi).max()):.6g}")
    return 1.0 - phi * phi


def mobility_derivative(phi: np.ndarray, kind: MobilityKind) -> np.ndarray:
    if kind is MobilityKind.CONSTANT:
        return np.zeros_like(phi)
    return -2.0 * phi


def trim(u: np.ndarray, r: int, axis: int | None = None, shift: int = 0) -> np.ndarray:
    """View of ``u`` with ``r`` layers removed per face, shifted ``shift`` cells along numpy ``axis``."""
    if r == 0 and shift == 0:
        return u
    index = []
    for ax, n in enumerate(u.shape):
        lo, hi = r, n - r
        if ax == axis:
            lo, hi = lo + shift, hi + shift
        index.append(slice(lo, hi))
    return u[tuple(index)]


def _npax(u: np.ndarray, axis: int) -> int:
    return u.ndim - 1 - axis


def diff_one_sided(u: np.ndarray, spacing: Sequence[float], axis: int, side: str) -> np.ndarray:
    """Forward (``side='+'``) or backward (``'-'``) difference along mesh ``axis``."""
    ax = _npax(u, axis)
    h = spacing[axis]
    c = trim(u, 1)
    if side == "+":
        return (trim(u, 1, ax, 1) - c) / h
    if side == "-":
        return (c - trim(u, 1, ax, -1)) / h
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def diff_second(u: np.ndarray, spacing: Sequence[float], axis: int) -> np.ndarray:
    ax = _npax(u, axis)
    h = spacing[axis]
    return (trim(u, 1, ax, 1) - 2.0 * trim(u, 1) + trim(u, 1, ax, -1)) / (h * h)


def laplacian(u: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    out = diff_second(u, spacing, 0)
    for axis in range(1, u.ndim):
        out = out + diff_second(u, spacing, axis)
    return out


# Stencils are dicts mapping offset tuples (x, y[, z]) to coefficients.

def laplacian_stencil(spacing: Sequence[float]) -> dict[tuple[int, ...], float]:
    ndim = len(spacing)
    zero = (0,) * ndim
    st = {zero: 0.0}
    for axis, h in enumerate(spacing):
        e = tuple(1 if a == axis else 0 for a in range(ndim))
        me = tuple(-v for v in e)
        w = 1.0 / (h * h)
        st[e] = st.get(e, 0.0) + w
        st[me] = st.get(me, 0.0) + w
        st[zero] -= 2.0 * w
    return st


def compose(first: dict, second: dict) -> dict:
    """Stencil of ``first`` applied after ``second`` (constant coefficients)."""
    out: dict = {}
    for (oa, ca), (ob, cb) in itertools.product(first.items(), second.items()):
        o = tuple(a + b for a, b in zip(oa, ob))
        out[o] = out.get(o, 0.0) + ca * cb
    return out


def combine(*terms) -> dict:
    """Linear combination given as ``(weight, stencil)`` pairs."""
    out: dict = {}
    for weight, st in terms:
        for o, c in st.items():
            out[o] = out.get(o, 0.0) + weight * c
    return out


def apply_stencil(u: np.ndarray, stencil: dict, radius: int) -> np.ndarray:
    """Apply a constant-coefficient stencil of the given radius."""
    nd = u.ndim
    out = None
    for offset in sorted(stencil, key=lambda o: tuple(reversed(o))):
        c = stencil[offset]
        index = []
        for ax, n in enumerate(u.shape):
            shift = offset[nd - 1 - ax]
            index.append(slice(radius + shift, n - radius + shift))
        term = c * u[tuple(index)]
        out = term if out is None else out + term
    return out


def biharmonic(u: np.ndarray, spacing: Sequence[float], fused: bool = False) -> np.ndarray:
    """Discrete ``Delta_d^2``; two Laplacian passes, or one fused 13-point (2D) stencil."""
    if fused:
        lap = laplacian_stencil(spacing)
        return apply_stencil(u, compose(lap, lap), 2)
    return laplacian(laplacian(u, spacing), spacing)


def div_mobility_grad(g: np.ndarray, phi_mid: np.ndarray, spacing: Sequence[float],
                      kind: MobilityKind = MobilityKind.CONSTANT, axes=None) -> np.ndarray:
    """``(div M grad)_d g`` with edge mobility averaged from the two adjacent cells.

    ``axes`` restricts the sum to the given mesh axes (all by default).
    """
    out = None
    m = mobility(phi_mid, kind)
    gc = trim(g, 1)
    mc = trim(m, 1)
    for axis in (range(g.ndim) if axes is None else axes):
        ax = _npax(g, axis)
        h2 = spacing[axis] ** 2
        m_plus = 0.5 * (mc + trim(m, 1, ax, 1))
        m_minus = 0.5 * (mc + trim(m, 1, ax, -1))
        term = (m_plus * (trim(g, 1, ax, 1) - gc) - m_minus * (gc - trim(g, 1, ax, -1))) / h2
        out = term if out is None else out + term
    return out
