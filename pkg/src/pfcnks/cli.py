"""Command-line driver: ``run``, ``convergence`` and ``error`` subcommands.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace

from .config import ConfigError, RunConfig, format_config, load_config
from .convergence import StudyConfig, convergence_study, format_table
from .energy import ModelParams
from .grid import create_grid, partition_domain
from .newton import NewtonConfig
from .scenarios import ScenarioSpec, initial_field
from .schwarz import SchwarzConfig
from .snapshot import SnapshotError, l2_error, read_snapshot
from .timeloop import Simulation, SolverFailure, TimeControls, run

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def build_simulation(cfg: RunConfig):
    """Grid, initial field and :class:`Simulation` described by a run configuration."""
    grid = create_grid(cfg.ndim, cfg.lengths, cfg.counts, cfg.bc)
    params = ModelParams(cfg.gamma, cfg.mobility, cfg.scheme)
    spec = ScenarioSpec(cfg.scenario, phi_bar=cfg.phi_bar, noise_amp=cfg.noise_amp, seed=cfg.seed,
                        amplitude=cfg.amplitude, q_x=cfg.q_x, q_y=cfg.q_y, patch_size=cfg.patch_size,
                        radius=cfg.radius, notch=tuple(cfg.notch), liquid=cfg.liquid,
                        sine_period=cfg.sine_period)
    controls = TimeControls(cfg.dt_min, cfg.dt_max, cfg.eta, cfg.t_end, cfg.snapshot_every,
                            cfg.max_steps, cfg.clip_to_end)
    newton = NewtonConfig(eps_r=cfg.eps_r, eps_a=cfg.eps_a, max_its=cfg.max_newton, xi_r=cfg.xi_r,
                          xi_a=cfg.xi_a, restart=cfg.restart, maxit=cfg.maxit,
                          frozen_mobility=cfg.jacobian == "frozen")
    schwarz = SchwarzConfig(cfg.precond, cfg.overlap, cfg.subsolver, cfg.reuse)
    sim = Simulation(grid, params, controls, newton, schwarz, partition_domain(grid, cfg.np))
    return grid, initial_field(grid, spec), sim


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    try:
        grid, phi0, sim = build_simulation(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(format_config(cfg))

    def progress(state):
        if not args.quiet:
            r = state.records[-1]
            print(f"step {r.step:6d}  t={r.time:.6g}  dt={r.dt:.4g}  F={r.free_energy:.10g}  "
                  f"newton={r.newton_its}  gmres={r.gmres_its}", flush=True)

    t0 = time.perf_counter()
    result = run(phi0, sim, os.path.join(out, "energy.csv"), out, progress)
    s = result.state
    print(f"done: {s.step} steps to t={s.time:.6g} in {time.perf_counter() - t0:.2f} s, "
          f"newton={s.newton_total}, gmres={s.gmres_total}, factorizations={s.factorizations}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    study = StudyConfig()
    if args.config:
        cfg = load_config(args.config)
        if cfg.ndim != 2 or cfg.lengths[0] != cfg.lengths[1]:
            raise ConfigError("convergence studies need a square 2D domain")
        study = replace(study, length=float(cfg.lengths[0]), gamma=cfg.gamma, scheme=cfg.scheme)
    updates = {}
    if args.t_end is not None:
        updates["t_end"] = args.t_end
    if args.meshes:
        updates["meshes"] = tuple(args.meshes)
    if args.reference_mesh is not None:
        updates["reference_mesh"] = args.reference_mesh
    if args.dt is not None:
        updates["space_dt"] = args.dt
    if args.mesh is not None:
        updates["time_mesh"] = args.mesh
    if args.steps:
        updates["steps"] = tuple(args.steps)
    if args.reference_dt is not None:
        updates["reference_dt"] = args.reference_dt
    if args.scheme is not None:
        updates["scheme"] = args.scheme
    study = replace(study, **updates)
    try:
        rows = convergence_study(args.mode, study)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table = format_table(rows, "h" if args.mode == "space" else "dt")
    sys.stdout.write(table)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(table)
    return EXIT_OK


def cmd_error(args) -> int:
    a, b = read_snapshot(args.a), read_snapshot(args.b)
    if a.counts != b.counts:
        raise ConfigError(f"snapshots have different meshes {a.counts} and {b.counts}")
    print(f"{l2_error(a.values, b.values):.17g}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfcnks", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--quiet", action="store_true", help="no per-step progress lines")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("convergence", help="refinement study on the sine scenario")
    c.add_argument("--mode", choices=("space", "time"), required=True)
    c.add_argument("--config", help="run config supplying domain length, gamma and scheme")
    c.add_argument("--t-end", type=float)
    c.add_argument("--meshes", type=int, nargs="+", help="space mode: coarse cell counts per axis")
    c.add_argument("--reference-mesh", type=int)
    c.add_argument("--dt", type=float, help="space mode: fixed time step")
    c.add_argument("--mesh", type=int, help="time mode: cell count per axis")
    c.add_argument("--steps", type=float, nargs="+", help="time mode: time steps")
    c.add_argument("--reference-dt", type=float)
    c.add_argument("--scheme", choices=("dvd", "implicit_euler"))
    c.add_argument("--output", help="also write the table to this CSV file")
    c.set_defaults(func=cmd_convergence)

    e = sub.add_parser("error", help="relative l2 error between two snapshots")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True, help="reference snapshot")
    e.set_defaults(func=cmd_error)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, SnapshotError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
