"""Energy-stable phase-field-crystal simulation with a Newton-Krylov-Schwarz solver."""
from .energy import ModelParams, Scheme, scheme_residual, total_free_energy, total_mass, variational_derivative
from .grid import BoundaryKind, Grid, create_grid, partition_domain
from .jacobian import assemble_jacobian
from .kernels import BACKEND
from .krylov import gmres_right_preconditioned
from .newton import NewtonConfig, newton_solve
from .operators import MobilityKind
from .scenarios import Scenario, ScenarioSpec, initial_field
from .schwarz import SchwarzConfig, SchwarzPreconditioner, Variant
from .timeloop import Simulation, TimeControls, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryKind", "Grid", "MobilityKind", "ModelParams", "NewtonConfig", "Scenario",
    "ScenarioSpec", "Scheme", "SchwarzConfig", "SchwarzPreconditioner", "Simulation", "TimeControls",
    "Variant", "assemble_jacobian", "create_grid", "gmres_right_preconditioned", "initial_field",
    "newton_solve", "partition_domain", "run", "scheme_residual", "total_free_energy", "total_mass",
    "variational_derivative",
]
