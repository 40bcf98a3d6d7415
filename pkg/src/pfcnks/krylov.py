"""Restarted GMRES with right preconditioning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import dot, norm

_EPS = np.finfo(float).eps
REORTH_TOL = 1e-8
BREAKDOWN_TOL = 1e-14


@dataclass
class LinearSolveReport:
    iterations: int = 0
    residual: float = math.inf          # true residual norm at exit
    estimate: float = math.inf          # recurrence (Hessenberg) estimate at exit
    converged: bool = False
    breakdown: bool = False
    target: float = 0.0
    history: list = field(default_factory=list)  # recurrence residual per inner iteration
    restarts: int = 0


def _identity(v):
    return v


def gmres_right_preconditioned(matvec: Callable, precond: Callable | None, rhs: np.ndarray,
                               xi_r: float = 1e-3, xi_a: float = 1e-11, restart: int = 30,
                               maxit: int = 10000, x0: np.ndarray | None = None):
    """Solve ``A x = rhs`` with GMRES on ``A H^{-1}``; returns ``(x, report)``.

    Stops when the true residual ``||rhs - A x||`` is at most
    ``max(xi_r * ||rhs||, xi_a)``.  ``maxit`` bounds the total inner iterations.
    """
    if xi_r < 0 or xi_a < 0:
        raise ValueError("tolerances must be nonnegative")
    if restart < 1:
        raise ValueError("restart length must be >= 1")
    precond = precond or _identity
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    n = rhs.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64).ravel()
    rhs_norm = norm(rhs)
    target = max(xi_r * rhs_norm, xi_a)
    report = LinearSolveReport(target=target)

    r = rhs - matvec(x) if x0 is not None else rhs.copy()
    beta = norm(r)
    report.residual = report.estimate = beta
    if beta <= target:
        report.converged = True
        return x, report

    breakdown_tol = BREAKDOWN_TOL * rhs_norm
    while report.iterations < maxit:
        m = min(restart, maxit - report.iterations)
        basis = np.zeros((m + 1, n))
        hess = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        basis[0] = r / beta
        g[0] = beta
        k = 0
        happy = False
        for j in range(m):
            w = matvec(precond(basis[j]))
            before = norm(w)
            for i in range(j + 1):
                hess[i, j] = dot(w, basis[i])
                w = w - hess[i, j] * basis[i]
            after = norm(w)
            if after == 0.0 or _EPS * before / after > REORTH_TOL:
                for i in range(j + 1):
                    c = dot(w, basis[i])
                    hess[i, j] += c
                    w = w - c * basis[i]
                after = norm(w)
            hess[j + 1, j] = after
            for i in range(j):
                t = cs[i] * hess[i, j] + sn[i] * hess[i + 1, j]
                hess[i + 1, j] = -sn[i] * hess[i, j] + cs[i] * hess[i + 1, j]
                hess[i, j] = t
            denom = math.hypot(hess[j, j], hess[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = hess[j, j] / denom, hess[j + 1, j] / denom
            hess[j, j] = denom
            hess[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            report.iterations += 1
            report.estimate = abs(g[j + 1])
            report.history.append(report.estimate)
            if after <= breakdown_tol:
                happy = True
                break
            basis[j + 1] = w / after
            if report.estimate <= target:
                break

        y = _upper_solve(hess[:k, :k], g[:k])
        x = x + precond(basis[:k].T @ y)
        r = rhs - matvec(x)
        beta = norm(r)
        report.residual = beta
        if happy:
            report.breakdown = True
        if beta <= target:
            report.converged = True
            return x, report
        report.restarts += 1
        if beta == 0.0:
            break
    report.converged = report.residual <= target
    return x, report


def _upper_solve(r: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = r.shape[0]
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = g[i] - np.dot(r[i, i + 1:], y[i + 1:])
        y[i] = s / r[i, i] if r[i, i] != 0.0 else 0.0
    return y
