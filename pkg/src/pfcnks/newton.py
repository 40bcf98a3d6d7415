"""Inexact Newton with backtracking line search for one time step."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import ModelParams, scheme_residual
from .grid import Grid, norm, reduce_sum
from .jacobian import assemble_jacobian, jacobian_sparsity
from .krylov import gmres_right_preconditioned
from .operators import MobilityDomainError


@dataclass(frozen=True)
class NewtonConfig:
    eps_r: float = 1e-8
    eps_a: float = 1e-10
    max_its: int = 50
    ls_factor: float = 0.5
    ls_c: float = 1e-4
    ls_min: float = 1e-12
    ls_max_halvings: int = 40
    xi_r: float = 1e-3
    xi_a: float = 1e-11
    restart: int = 30
    maxit: int = 10000
    frozen_mobility: bool = False
    conserve_mass: bool = True
    # once ||F|| <= stall_ratio ||F0||, a failed line search or a step reducing ||F|| by less
    # than half counts as convergence at the roundoff floor; 0 disables
    stall_ratio: float = 0.0

    def __post_init__(self):
        if self.eps_r < 0 or self.eps_a < 0:
            raise ValueError("nonlinear tolerances must be nonnegative")
        if not 0.0 < self.ls_factor < 1.0:
            raise ValueError(f"backtracking factor must lie in (0, 1), got {self.ls_factor}")
        if self.max_its < 0:
            raise ValueError("max_its must be >= 0")


@dataclass
class NonlinearSolveReport:
    iterations: int = 0
    gmres_iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)   # ||F|| before the first and after each iteration
    steps: list = field(default_factory=list)       # accepted line-search lengths
    converged: bool = False
    reason: str = ""
    factorizations: int = 0

    @property
    def total_gmres(self) -> int:
        return int(sum(self.gmres_iterations))


class NewtonFailure(RuntimeError):
    def __init__(self, report: NonlinearSolveReport):
        self.report = report
        super().__init__(f"Newton solve failed: {report.reason}")


def newton_solve(phi_old: np.ndarray, dt: float, grid: Grid, params: ModelParams,
                 config: NewtonConfig = NewtonConfig(), precond=None):
    """Solve the one-step scheme for the new state starting from ``phi_old``.

    ``precond`` is a :class:`SchwarzPreconditioner` (or None for plain GMRES).
    Returns ``(phi_new, report)``; on failure ``report.converged`` is False and
    ``phi_new`` is the last iterate.
    """
    if not dt > 0:
        raise ValueError(f"time step must be > 0, got {dt}")
    phi_old = np.asarray(phi_old, dtype=np.float64)
    if not np.all(np.isfinite(phi_old)):
        raise ValueError("initial state is not finite")
    pattern = jacobian_sparsity(grid)
    report = NonlinearSolveReport()

    def residual(phi):
        return scheme_residual(phi, phi_old, dt, grid, params)

    phi = phi_old.copy()
    f = residual(phi)
    fnorm = norm(f)
    report.residuals.append(fnorm)
    target = max(config.eps_r * fnorm, config.eps_a)
    if fnorm <= target:
        report.converged = True
        report.reason = "initial residual below tolerance"
        return phi, report

    setups0 = precond.setups if precond is not None else 0
    for m in range(config.max_its):
        jac = assemble_jacobian(phi, phi_old, dt, grid, params, pattern, config.frozen_mobility)
        apply = None
        if precond is not None:
            precond.update(phi, phi_old, dt, new_step=(m == 0))
            apply = precond.apply
        step, lin = gmres_right_preconditioned(jac.matvec, apply, -f.ravel(), config.xi_r,
                                               config.xi_a, config.restart, config.maxit)
        report.gmres_iterations.append(lin.iterations)
        step = step.reshape(phi.shape)
        if config.conserve_mass:
            step = _mean_consistent(step, phi, phi_old)

        lam = 1.0
        accepted = False
        for _ in range(config.ls_max_halvings + 1):
            trial = phi + lam * step
            try:
                f_trial = residual(trial)
                trial_norm = norm(f_trial)
            except MobilityDomainError:
                trial_norm = math.inf
            if trial_norm <= (1.0 - config.ls_c * lam) * fnorm:
                accepted = True
                break
            lam *= config.ls_factor
            if lam < config.ls_min:
                break
        if precond is not None:
            precond.invalidate()
        report.iterations = m + 1
        if not accepted:
            if fnorm <= config.stall_ratio * report.residuals[0]:
                report.converged = True
                report.reason = "stalled at the roundoff floor"
            else:
                report.reason = f"line search failed at iteration {m + 1}"
            break
        stalled = trial_norm > 0.5 * fnorm and trial_norm <= config.stall_ratio * report.residuals[0]
        phi, f, fnorm = trial, f_trial, trial_norm
        report.steps.append(lam)
        report.residuals.append(fnorm)
        if fnorm <= target:
            report.converged = True
            report.reason = "converged"
            break
        if stalled:
            report.converged = True
            report.reason = "stalled at the roundoff floor"
            break
    else:
        report.reason = f"no convergence in {config.max_its} iterations"
    if precond is not None:
        report.factorizations = precond.setups - setups0
    return phi, report


def _mean_consistent(step: np.ndarray, phi: np.ndarray, phi_old: np.ndarray) -> np.ndarray:
    """Replace the mean of a Newton correction by its exact value.

    Every column of the Jacobian sums to ``1/dt`` (the flux part is in
    divergence form), so the exact correction has mean ``-mean(phi - phi_old)``.
    Inexact Krylov solves perturb only this one number; fixing it keeps the
    iterates on the mass of ``phi_old`` without touching the rest of the step.
    """
    n = step.size
    shift = (reduce_sum(step) + reduce_sum(phi - phi_old)) / n
    return step - shift
