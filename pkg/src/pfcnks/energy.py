"""Discrete free energy, discrete variational derivative and the scheme residual.

Functions suffixed ``_padded`` act on halo-padded arrays (see
:mod:`pfcnks.operators`); the others take owned values on a :class:`Grid` and pad
them through its boundary condition.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Grid, pad, reduce_sum
from .operators import MobilityKind, diff_one_sided, div_mobility_grad, laplacian, trim


class Scheme(str, enum.Enum):
    DVD = "dvd"
    # fully implicit first-order variant; used only as a control in order studies
    IMPLICIT_EULER = "implicit_euler"


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    mobility: MobilityKind = MobilityKind.CONSTANT
    scheme: Scheme = Scheme.DVD

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"quench depth gamma must be > 0, got {self.gamma}")
        object.__setattr__(self, "mobility", MobilityKind.parse(self.mobility))
        object.__setattr__(self, "scheme", Scheme(self.scheme))


def local_energy_padded(u: np.ndarray, spacing, gamma: float) -> np.ndarray:
    """Per-cell discrete local energy ``G_d``; consumes one halo layer."""
    c = trim(u, 1)
    lap = laplacian(u, spacing)
    grad = 0.0
    for axis in range(u.ndim):
        grad = grad + diff_one_sided(u, spacing, axis, "+") ** 2 + diff_one_sided(u, spacing, axis, "-") ** 2
    return 0.5 * (1.0 - gamma) * c * c + 0.25 * c ** 4 + 0.5 * lap * lap - 0.5 * grad


def local_energy(phi: np.ndarray, grid: Grid, gamma: float) -> np.ndarray:
    return local_energy_padded(pad(phi, grid, 1), grid.spacings, gamma)


def total_free_energy(phi: np.ndarray, grid: Grid, params: ModelParams | float) -> float:
    gamma = params.gamma if isinstance(params, ModelParams) else float(params)
    return reduce_sum(local_energy(phi, grid, gamma)) * grid.cell_volume


def total_mass(phi: np.ndarray, grid: Grid) -> float:
    return reduce_sum(phi) * grid.cell_volume


def _mid(pn, po, scheme: Scheme):
    return 0.5 * (pn + po) if scheme is Scheme.DVD else pn


def variational_derivative_padded(pn: np.ndarray, po: np.ndarray, spacing, gamma: float,
                                  scheme: Scheme = Scheme.DVD) -> np.ndarray:
    """Discrete variational derivative; consumes two halo layers.

    For the DVD scheme this is ``[(1-g) + 2 Lap + Lap^2]((a+b)/2) + (a^3 + a^2 b + a b^2 + b^3)/4``
    with ``a`` the new and ``b`` the old state.
    """
    mid = _mid(pn, po, scheme)
    lap = laplacian(mid, spacing)
    bih = laplacian(lap, spacing)
    linear = (1.0 - gamma) * trim(mid, 2) + 2.0 * trim(lap, 1) + bih
    a = trim(pn, 2)
    if scheme is Scheme.DVD:
        b = trim(po, 2)
        cubic = (a * a * a + a * a * b + a * b * b + b * b * b) / 4.0
    else:
        cubic = a * a * a
    return linear + cubic


def variational_derivative(phi_new, phi_old, grid: Grid, params: ModelParams) -> np.ndarray:
    return variational_derivative_padded(pad(phi_new, grid, 2), pad(phi_old, grid, 2),
                                         grid.spacings, params.gamma, params.scheme)


def scheme_residual_padded(pn: np.ndarray, po: np.ndarray, dt: float, spacing,
                           params: ModelParams) -> np.ndarray:
    """Residual ``(a-b)/dt - div(M grad A)`` on the interior of width-3 padded arrays."""
    if not dt > 0:
        raise ValueError(f"time step must be > 0, got {dt}")
    chem = variational_derivative_padded(pn, po, spacing, params.gamma, params.scheme)
    mid = trim(_mid(pn, po, params.scheme), 2)
    flux = div_mobility_grad(chem, mid, spacing, params.mobility)
    return (trim(pn, 3) - trim(po, 3)) / dt - flux


def scheme_residual(phi_new, phi_old, dt: float, grid: Grid, params: ModelParams) -> np.ndarray:
    return scheme_residual_padded(pad(phi_new, grid), pad(phi_old, grid), dt, grid.spacings, params)
