"""Grid and time-step refinement studies on the smooth sine initial state."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .energy import ModelParams
from .grid import create_grid, partition_domain
from .newton import NewtonConfig
from .scenarios import init_sine
from .schwarz import SchwarzConfig
from .spectral import SpectralPreconditioner
from .snapshot import l2_error
from .timeloop import Simulation, TimeControls, run


@dataclass(frozen=True)
class StudyConfig:
    length: float = 32.0
    t_end: float = 5.0
    gamma: float = 0.025
    scheme: str = "dvd"
    # space mode
    meshes: tuple[int, ...] = (32, 64, 128)
    reference_mesh: int = 512
    space_dt: float = 0.025
    # time mode
    time_mesh: int = 128
    steps: tuple[float, ...] = (0.08, 0.04, 0.02)
    reference_dt: float = 0.0025
    # iterate down to the roundoff floor, which grows like h^-6 under refinement
    newton: NewtonConfig = NewtonConfig(eps_r=1e-12, eps_a=1e-14, xi_r=1e-8, xi_a=1e-15,
                                        stall_ratio=1e-4, ls_max_halvings=2)
    # None: FFT preconditioner; otherwise a Schwarz configuration
    schwarz: SchwarzConfig | None = None
    np: int = 1


@dataclass
class StudyRow:
    size: float          # mesh spacing or time step
    error: float
    order: float | None  # log2 of the error ratio to the previous (coarser) row


def solve_sine(n: int, dt: float, cfg: StudyConfig) -> np.ndarray:
    """State at ``t_end`` from the sine initial data on an ``n x n`` periodic mesh."""
    grid = create_grid(2, (cfg.length, cfg.length), (n, n), "periodic")
    params = ModelParams(cfg.gamma, scheme=cfg.scheme)
    controls = TimeControls(dt, dt, 0.0, cfg.t_end, clip_to_end=True)
    precond = SpectralPreconditioner(grid, params) if cfg.schwarz is None else None
    sim = Simulation(grid, params, controls, cfg.newton, cfg.schwarz, partition_domain(grid, cfg.np),
                     precond)
    return run(init_sine(grid), sim).phi


def block_average(fine: np.ndarray, factor: int) -> np.ndarray:
    """Average ``factor x factor`` blocks of a cell-centred field onto the coarse cells."""
    if any(n % factor for n in fine.shape):
        raise ValueError(f"mesh {fine.shape} is not nested with factor {factor}")
    shape = []
    for n in fine.shape:
        shape += [n // factor, factor]
    return fine.reshape(shape).mean(axis=tuple(range(1, 2 * fine.ndim, 2)))


def _orders(sizes, errors) -> list[StudyRow]:
    rows = []
    for k, (s, e) in enumerate(zip(sizes, errors)):
        order = None if k == 0 else math.log2(errors[k - 1] / e)
        rows.append(StudyRow(s, e, order))
    return rows


def space_study(cfg: StudyConfig = StudyConfig()) -> list[StudyRow]:
    meshes = sorted(cfg.meshes)
    for n in meshes:
        if cfg.reference_mesh % n:
            raise ValueError(f"mesh {n} is not nested in the reference mesh {cfg.reference_mesh}")
    ref = solve_sine(cfg.reference_mesh, cfg.space_dt, cfg)
    errors = [l2_error(solve_sine(n, cfg.space_dt, cfg), block_average(ref, cfg.reference_mesh // n))
              for n in meshes]
    return _orders([cfg.length / n for n in meshes], errors)


def time_study(cfg: StudyConfig = StudyConfig()) -> list[StudyRow]:
    steps = sorted(cfg.steps, reverse=True)
    ref = solve_sine(cfg.time_mesh, cfg.reference_dt, cfg)
    errors = [l2_error(solve_sine(cfg.time_mesh, dt, cfg), ref) for dt in steps]
    return _orders(steps, errors)


def convergence_study(mode: str, cfg: StudyConfig = StudyConfig()) -> list[StudyRow]:
    if mode == "space":
        return space_study(cfg)
    if mode == "time":
        return time_study(cfg)
    raise ValueError(f"mode must be 'space' or 'time', got {mode!r}")


def with_scheme(cfg: StudyConfig, scheme: str) -> StudyConfig:
    return replace(cfg, scheme=scheme)


def format_table(rows: list[StudyRow], label: str) -> str:
    lines = [f"{label},l2_error,order"]
    for r in rows:
        lines.append(f"{r.size:.17g},{r.error:.17g},{'' if r.order is None else f'{r.order:.6f}'}")
    return "\n".join(lines) + "\n"
