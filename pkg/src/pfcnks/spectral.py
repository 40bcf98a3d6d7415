"""FFT preconditioner for periodic grids.

Approximates the step Jacobian by its constant-coefficient part, with the
mobility and the cubic-term derivative replaced by their means, which the
discrete Fourier transform diagonalizes. Used by the refinement studies, where
meshes are fine enough that incomplete factorizations of the sixth-order
operator stop being useful preconditioners.
"""
from __future__ import annotations

import numpy as np

from .energy import ModelParams, Scheme
from .grid import BoundaryKind, Grid
from .operators import MobilityKind, mobility


def laplacian_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of minus the 5/7-point Laplacian on the periodic grid (numpy layout)."""
    mu = np.zeros(grid.shape)
    for a, (n, h) in enumerate(zip(grid.counts, grid.spacings)):
        k = np.arange(n)
        s = 4.0 / (h * h) * np.sin(np.pi * k / n) ** 2
        shape = [1] * grid.ndim
        shape[grid.ndim - 1 - a] = n
        mu = mu + s.reshape(shape)
    return mu


class SpectralPreconditioner:
    def __init__(self, grid: Grid, params: ModelParams):
        if grid.bc is not BoundaryKind.PERIODIC:
            raise ValueError("the spectral preconditioner needs a periodic grid")
        self.grid = grid
        self.params = params
        self.mu = laplacian_symbol(grid)
        self.setups = 0
        self.ready = False
        self._inv = None

    def refresh(self, phi_new, phi_old, dt: float):
        p = self.params
        a, b = np.asarray(phi_new), np.asarray(phi_old)
        mu = self.mu
        lin = (1.0 - p.gamma) - 2.0 * mu + mu * mu
        if p.scheme is Scheme.DVD:
            cubic = float(np.mean((3 * a * a + 2 * a * b + b * b) / 4.0))
            m = mobility(0.5 * (a + b), p.mobility)
            lam = 1.0 / dt + float(np.mean(m)) * mu * (0.5 * lin + cubic)
        else:
            cubic = float(np.mean(3 * a * a))
            m = mobility(a, p.mobility) if p.mobility is not MobilityKind.CONSTANT else np.ones(1)
            lam = 1.0 / dt + float(np.mean(m)) * mu * (lin + cubic)
        floor = 1e-3 / dt
        lam = np.where(np.abs(lam) < floor, floor, lam)
        self._inv = 1.0 / lam
        self.setups += 1
        self.ready = True

    def update(self, phi_new, phi_old, dt: float, new_step: bool) -> bool:
        if new_step or not self.ready:
            self.refresh(phi_new, phi_old, dt)
            return True
        return False

    def invalidate(self):
        pass

    def apply(self, v: np.ndarray) -> np.ndarray:
        u = np.fft.ifftn(np.fft.fftn(v.reshape(self.grid.shape)) * self._inv).real
        return u.ravel()

    __call__ = apply
