"""Time integration with energy-driven adaptive steps, logging and snapshots."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .energy import ModelParams, total_free_energy, total_mass
from .grid import Grid, Partition, partition_domain
from .newton import NewtonConfig, newton_solve
from .schwarz import SchwarzConfig, SchwarzPreconditioner
from .snapshot import write_snapshot

LOG_HEADER = "step,time,dt,free_energy,mass,newton_its,gmres_its"


@dataclass(frozen=True)
class TimeControls:
    dt_min: float
    dt_max: float
    eta: float
    t_end: float
    snapshot_every: int = 0
    max_steps: int | None = None
    clip_to_end: bool = False

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ValueError(f"need 0 < dt_min <= dt_max, got {self.dt_min}, {self.dt_max}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")


def next_dt(controls: TimeControls, energy: float, energy_prev: float, dt_prev: float) -> float:
    """``max(dt_min, dt_max / sqrt(1 + eta |F'|^2))`` with ``F'`` the last energy slope."""
    if not dt_prev > 0:
        raise ValueError(f"previous time step must be > 0, got {dt_prev}")
    slope = abs(energy - energy_prev) / dt_prev
    return max(controls.dt_min, controls.dt_max / math.sqrt(1.0 + controls.eta * slope * slope))


@dataclass
class StepRecord:
    step: int
    time: float
    dt: float
    free_energy: float
    mass: float
    newton_its: int
    gmres_its: int
    factorizations: int = 0
    retries: int = 0

    def csv(self) -> str:
        return (f"{self.step},{self.time:.17g},{self.dt:.17g},{self.free_energy:.17g},"
                f"{self.mass:.17g},{self.newton_its},{self.gmres_its}")


@dataclass
class RunState:
    step: int = 0
    time: float = 0.0
    dt: float = 0.0
    energies: list = field(default_factory=list)   # at most the last two, oldest first
    dt_prev: float = 0.0
    newton_total: int = 0
    gmres_total: int = 0
    factorizations: int = 0
    records: list = field(default_factory=list)


class SolverFailure(RuntimeError):
    def __init__(self, message: str, state: RunState, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


@dataclass
class Simulation:
    """Everything needed to advance a field; ``precond`` is built on first use."""

    grid: Grid
    params: ModelParams
    controls: TimeControls
    newton: NewtonConfig = NewtonConfig()
    schwarz: SchwarzConfig | None = SchwarzConfig()
    partition: Partition | None = None
    precond: SchwarzPreconditioner | None = None

    def __post_init__(self):
        if self.partition is None:
            self.partition = partition_domain(self.grid, 1)
        if self.schwarz is not None and self.precond is None:
            self.precond = SchwarzPreconditioner(self.grid, self.partition, self.schwarz, self.params,
                                                 self.newton.frozen_mobility)


def proposed_dt(sim: Simulation, state: RunState) -> float:
    c = sim.controls
    if state.step < 2:
        dt = c.dt_min
    else:
        dt = next_dt(c, state.energies[-1], state.energies[-2], state.dt_prev)
    # a remainder within roundoff of a full step is absorbed rather than left as a sliver
    if c.clip_to_end and state.time + dt * (1.0 + 1e-9) >= c.t_end:
        dt = c.t_end - state.time
    return dt


def advance(sim: Simulation, state: RunState, phi: np.ndarray):
    """Take one accepted step; returns the new field and appends a record to ``state``.

    A failed nonlinear solve halves the step (never below ``dt_min``); failing
    at ``dt_min`` raises :class:`SolverFailure`.
    """
    c = sim.controls
    dt = proposed_dt(sim, state)
    retries = 0
    while True:
        new, report = newton_solve(phi, dt, sim.grid, sim.params, sim.newton, sim.precond)
        if report.converged and np.all(np.isfinite(new)):
            break
        if dt <= c.dt_min:
            raise SolverFailure(f"nonlinear solve failed at step {state.step + 1} with dt={dt:g}: "
                                f"{report.reason}", state, report)
        dt = max(0.5 * dt, c.dt_min)
        retries += 1

    if c.clip_to_end and dt == c.t_end - state.time:
        state.time = c.t_end
    else:
        state.time += dt
    state.step += 1
    state.dt_prev = dt
    state.dt = dt
    energy = total_free_energy(new, sim.grid, sim.params)
    state.energies = (state.energies + [energy])[-2:]
    state.newton_total += report.iterations
    state.gmres_total += report.total_gmres
    state.factorizations += report.factorizations
    state.records.append(StepRecord(state.step, state.time, dt, energy, total_mass(new, sim.grid),
                                    report.iterations, report.total_gmres, report.factorizations,
                                    retries))
    return new, report


@dataclass
class RunResult:
    phi: np.ndarray
    state: RunState
    initial_energy: float
    initial_mass: float


def _done(controls: TimeControls, state: RunState) -> bool:
    if controls.max_steps is not None and state.step >= controls.max_steps:
        return True
    return state.time >= controls.t_end


def run(phi0: np.ndarray, sim: Simulation, log_path=None, snapshot_dir=None, progress=None) -> RunResult:
    """Advance until ``t_end`` (or ``max_steps``), writing the energy log and snapshots."""
    phi = np.array(phi0, dtype=np.float64)
    if phi.shape != sim.grid.shape:
        raise ValueError(f"initial field has shape {phi.shape}, expected {sim.grid.shape}")
    state = RunState()
    e0 = total_free_energy(phi, sim.grid, sim.params)
    m0 = total_mass(phi, sim.grid)
    state.energies = [e0]
    log = None
    if log_path is not None:
        log = open(log_path, "w", newline="\n")
        log.write(LOG_HEADER + "\n")
    every = sim.controls.snapshot_every
    try:
        if snapshot_dir is not None and every:
            _snapshot(snapshot_dir, phi, sim.grid, state)
        while not _done(sim.controls, state):
            phi, _ = advance(sim, state, phi)
            if log is not None:
                log.write(state.records[-1].csv() + "\n")
                log.flush()
            if snapshot_dir is not None and every and state.step % every == 0:
                _snapshot(snapshot_dir, phi, sim.grid, state)
            if progress is not None:
                progress(state)
    finally:
        if log is not None:
            log.close()
    if snapshot_dir is not None:
        write_snapshot(os.path.join(snapshot_dir, "final.snap"), phi, sim.grid.lengths,
                       state.time, state.step)
    return RunResult(phi, state, e0, m0)


def _snapshot(directory, phi, grid: Grid, state: RunState):
    write_snapshot(os.path.join(directory, f"snap_{state.step:06d}.snap"), phi, grid.lengths,
                   state.time, state.step)


def replay_dt(records, controls: TimeControls) -> list[float]:
    """Step sizes implied by the logged energies under the adaptive law."""
    out = []
    for k, _ in enumerate(records):
        if k < 2:
            out.append(controls.dt_min)
        else:
            out.append(next_dt(controls, records[k - 1].free_energy, records[k - 2].free_energy,
                               records[k - 1].dt))
    return out


def read_log(path) -> list[StepRecord]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != LOG_HEADER:
            raise ValueError(f"unexpected energy log header {header!r}")
        for line in fh:
            v = line.strip().split(",")
            rows.append(StepRecord(int(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]),
                                   int(v[5]), int(v[6])))
    return rows
