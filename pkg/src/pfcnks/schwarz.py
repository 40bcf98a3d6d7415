"""Overlapping Schwarz preconditioners with LU / ILU(k) subdomain solves.

Each subdomain problem is a local rediscretisation of the Jacobian on the
extended box: the state is gathered with a zero ring outside the box and
couplings leaving the box are dropped.  Rows whose stencil stays inside the
box therefore equal the corresponding rows of the global Jacobian exactly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .energy import ModelParams
from .grid import HALO, Box, Grid, Partition, pad_box
from .ilu import IluSymbolic, factorize, ilu_symbolic
from .jacobian import SparseMatrix, StencilPattern, assemble_local, box_pattern


class Variant(str, enum.Enum):
    ASM = "asm"     # classical additive Schwarz
    LRAS = "lras"   # restricted on extension
    RRAS = "rras"   # restricted on restriction

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"asm": cls.ASM, "as": cls.ASM, "classical": cls.ASM, "classicalas": cls.ASM,
                   "lras": cls.LRAS, "leftras": cls.LRAS, "ras": cls.LRAS,
                   "rras": cls.RRAS, "rightras": cls.RRAS}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown Schwarz variant {value!r}") from None


SUBSOLVERS = ("lu", "ilu0", "ilu1", "ilu2")


@dataclass(frozen=True)
class SchwarzConfig:
    variant: Variant = Variant.LRAS
    overlap: int = 1
    subsolver: str = "ilu0"
    reuse: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.overlap not in (0, 1, 2):
            raise ValueError(f"overlap must be 0, 1 or 2, got {self.overlap}")
        sub = str(self.subsolver).lower()
        if sub not in SUBSOLVERS:
            raise ValueError(f"subdomain solver must be one of {SUBSOLVERS}, got {self.subsolver!r}")
        object.__setattr__(self, "subsolver", sub)


class StaleFactorizationError(RuntimeError):
    pass


@dataclass
class SubdomainOperator:
    """Local problem on one extended box and its factorization."""

    index: int
    box: Box
    pattern: StencilPattern
    global_index: np.ndarray      # global flat index per local cell (restriction R^delta)
    owned_local: np.ndarray       # local positions of owned cells (R^0 inside the box)
    matrix: SparseMatrix | None = None
    factorization: object = None
    symbolic: dict = field(default_factory=dict)

    @property
    def ncells(self) -> int:
        return self.box.ncells

    def restrict(self, v: np.ndarray, owned_only: bool = False) -> np.ndarray:
        local = v[self.global_index]
        if owned_only:
            out = np.zeros_like(local)
            out[self.owned_local] = local[self.owned_local]
            return out
        return local


def subdomain_operators(grid: Grid, partition: Partition, overlap: int) -> list[SubdomainOperator]:
    ops = []
    for sd in partition.subdomains:
        box = sd.extended_box(grid, overlap)
        if box.ncells == 0:
            raise ValueError(f"subdomain {sd.index} has an empty extended box")
        gi = box.flat_indices(grid)
        owned = sd.owned_box().flat_indices(grid)
        owned_local = np.nonzero(np.isin(gi, owned))[0]
        ops.append(SubdomainOperator(sd.index, box, box_pattern(grid, box), gi, owned_local))
    return ops


def build_subdomain_matrices(phi_new: np.ndarray, phi_old: np.ndarray, dt: float, grid: Grid,
                             params: ModelParams, partition: Partition, config: SchwarzConfig,
                             ops: list[SubdomainOperator] | None = None,
                             frozen_mobility: bool = False) -> list[SubdomainOperator]:
    """Assemble ``A_k`` for every subdomain by local rediscretisation."""
    ops = ops if ops is not None else subdomain_operators(grid, partition, config.overlap)
    for op in ops:
        pn = pad_box(phi_new, grid, op.box, HALO)
        po = pad_box(phi_old, grid, op.box, HALO)
        op.matrix = assemble_local(pn, po, dt, params, op.pattern, frozen_mobility)
    return ops


def factorize_operator(op: SubdomainOperator, solver: str):
    sym: IluSymbolic | None = None
    if solver != "lu":
        # the symbolic phase depends only on the pattern, which never changes
        sym = op.symbolic.get(solver)
        if sym is None:
            sym = op.symbolic[solver] = ilu_symbolic(op.matrix, int(solver[3:]))
    op.factorization = factorize(op.matrix, solver, sym)
    return op.factorization


def apply_preconditioner(config: SchwarzConfig, ops: list[SubdomainOperator], v: np.ndarray) -> np.ndarray:
    """``H^{-1} v`` for the configured variant; subdomains are visited in index order."""
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    y = np.zeros_like(v)
    variant = config.variant
    for op in ops:
        if op.factorization is None:
            raise StaleFactorizationError(f"subdomain {op.index} has no factorization")
        z = op.factorization.solve(op.restrict(v, owned_only=variant is Variant.RRAS))
        if variant is Variant.LRAS:
            y[op.global_index[op.owned_local]] += z[op.owned_local]
        else:
            y[op.global_index] += z
    return y


class SchwarzPreconditioner:
    """Stateful preconditioner with factorization reuse across Newton iterations.

    ``update`` is called once per Newton iteration; with ``reuse`` the
    factorization is recomputed only at the first iteration of a time step.
    ``setups`` counts preconditioner (re)factorizations, ``subdomain_factorizations``
    counts the individual subdomain factorizations.
    """

    def __init__(self, grid: Grid, partition: Partition, config: SchwarzConfig,
                 params: ModelParams, frozen_mobility: bool = False):
        self.grid = grid
        self.partition = partition
        self.config = config
        self.params = params
        self.frozen_mobility = frozen_mobility
        self.ops = subdomain_operators(grid, partition, config.overlap)
        self.setups = 0
        self.subdomain_factorizations = 0
        self.ready = False
        self.stale = True

    def refresh(self, phi_new, phi_old, dt: float):
        build_subdomain_matrices(phi_new, phi_old, dt, self.grid, self.params, self.partition,
                                 self.config, self.ops, self.frozen_mobility)
        for op in self.ops:
            factorize_operator(op, self.config.subsolver)
        self.setups += 1
        self.subdomain_factorizations += len(self.ops)
        self.ready = True
        self.stale = False

    def update(self, phi_new, phi_old, dt: float, new_step: bool) -> bool:
        """Refresh or reuse; returns True when a new factorization was computed."""
        if new_step or not self.config.reuse or not self.ready:
            self.refresh(phi_new, phi_old, dt)
            return True
        self.stale = False
        return False

    def invalidate(self):
        """Mark the factorization as belonging to an outdated Newton iterate."""
        self.stale = True

    def apply(self, v: np.ndarray) -> np.ndarray:
        if not self.ready or (self.stale and not self.config.reuse):
            raise StaleFactorizationError("preconditioner used with an outdated factorization")
        return apply_preconditioner(self.config, self.ops, v)

    __call__ = apply


def refresh_or_reuse(precond: SchwarzPreconditioner, phi_new, phi_old, dt: float,
                     new_step: bool) -> SchwarzPreconditioner:
    """Refactorize at each new time step, and at every Newton iteration when reuse is off."""
    precond.update(phi_new, phi_old, dt, new_step)
    return precond
