"""Structured uniform mesh, Cartesian domain partition, halo exchange and reductions.

Array layout convention: a field on an ``ndim``-dimensional grid is a C-ordered
numpy array of shape ``counts[::-1]`` (``(Ny, Nx)`` or ``(Nz, Ny, Nx)``), so that
flattening gives x fastest, then y, then z.  Axis numbers used throughout the
package are *mesh* axes (0 = x); :func:`np_axis` converts to numpy axes.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

HALO = 3
MIN_COUNT = 8
MIN_BOX = 4

# Face treatments of a box.  "halo" means neighbour data through the grid's
# boundary condition (periodic wrap or even reflection); "zero" is the
# homogeneous Dirichlet ring used for Schwarz subdomain problems.
FACE_HALO = "halo"
FACE_ZERO = "zero"


class BoundaryKind(str, enum.Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BoundaryKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"periodic": cls.PERIODIC, "pbc": cls.PERIODIC,
                   "neumann": cls.NEUMANN, "nbc": cls.NEUMANN}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown boundary condition {value!r}") from None


def np_axis(ndim: int, axis: int) -> int:
    """Numpy axis holding mesh axis ``axis`` (0 = x)."""
    return ndim - 1 - axis


@dataclass(frozen=True)
class Grid:
    ndim: int
    lengths: tuple[float, ...]
    counts: tuple[int, ...]
    bc: BoundaryKind = BoundaryKind.PERIODIC

    def __post_init__(self):
        if self.ndim not in (1, 2, 3):
            raise ValueError(f"ndim must be 1, 2 or 3, got {self.ndim}")
        if len(self.lengths) != self.ndim or len(self.counts) != self.ndim:
            raise ValueError("lengths and counts must have one entry per axis")
        for n in self.counts:
            if int(n) != n or n < MIN_COUNT:
                raise ValueError(
                    f"cell counts must be integers >= {MIN_COUNT} (stencil width 3), got {self.counts}")
        for length in self.lengths:
            if not (length > 0 and math.isfinite(length)):
                raise ValueError(f"domain lengths must be positive, got {self.lengths}")

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(float(length) / int(n) for length, n in zip(self.lengths, self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(n) for n in reversed(self.counts))

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)

    def centers(self, axis: int) -> np.ndarray:
        """Cell-centre coordinates ``(i - 1/2) * h`` for ``i = 1..N`` along ``axis``."""
        return (np.arange(self.counts[axis]) + 0.5) * self.spacings[axis]

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable cell-centre coordinate arrays, ordered (x, y[, z])."""
        out = []
        for axis in range(self.ndim):
            shape = [1] * self.ndim
            shape[np_axis(self.ndim, axis)] = self.counts[axis]
            out.append(self.centers(axis).reshape(shape))
        return tuple(out)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def create_grid(ndim: int, lengths: Sequence[float], counts: Sequence[int], bc_kind="periodic") -> Grid:
    return Grid(int(ndim), tuple(float(v) for v in lengths), tuple(int(v) for v in counts),
                BoundaryKind.parse(bc_kind))


# ----------------------------------------------------------------------------
# Boxes and partitions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Index box on a grid, one ``(start, size)`` pair and two face treatments per mesh axis.

    ``start`` may be negative or the box may run past ``N`` only on periodic
    axes, where global indices wrap.
    """

    start: tuple[int, ...]
    size: tuple[int, ...]
    faces: tuple[tuple[str, str], ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(reversed(self.size))

    @property
    def ncells(self) -> int:
        return math.prod(self.size)

    def axis_indices(self, grid: Grid, axis: int) -> np.ndarray:
        """Global indices of the box cells along ``axis``."""
        n = grid.counts[axis]
        return (self.start[axis] + np.arange(self.size[axis])) % n

    def flat_indices(self, grid: Grid) -> np.ndarray:
        """Global flat (x-fastest) index of every box cell in local x-fastest order."""
        flat = np.zeros(self.shape, dtype=np.int64)
        stride = 1
        for axis in range(grid.ndim):
            shape = [1] * grid.ndim
            shape[np_axis(grid.ndim, axis)] = self.size[axis]
            flat = flat + self.axis_indices(grid, axis).reshape(shape) * stride
            stride *= grid.counts[axis]
        return flat.ravel()

    def contains(self, grid: Grid) -> np.ndarray:
        """Boolean mask over the grid marking cells inside the box."""
        mask = np.zeros(grid.size, dtype=bool)
        mask[self.flat_indices(grid)] = True
        return mask.reshape(grid.shape)


def _bc_map(grid: Grid, axis: int, g: np.ndarray) -> np.ndarray:
    """Map (possibly out-of-range) global coordinates onto owning cells."""
    n = grid.counts[axis]
    if grid.bc is BoundaryKind.PERIODIC:
        return g % n
    g = np.where(g < 0, -1 - g, g)
    return np.where(g >= n, 2 * n - 1 - g, g)


def padded_axis_map(grid: Grid, box: Box, axis: int, width: int = HALO):
    """Global source index and validity for each padded coordinate of ``box`` along ``axis``.

    Returns ``(index, valid)`` for local coordinates ``-width .. size+width-1``.
    Invalid entries (zero faces) carry index 0 and must be masked.
    """
    c = np.arange(-width, box.size[axis] + width)
    g = box.start[axis] + c
    index = _bc_map(grid, axis, g)
    valid = np.ones(c.shape, dtype=bool)
    lo_face, hi_face = box.faces[axis]
    if lo_face == FACE_ZERO:
        valid &= c >= 0
    if hi_face == FACE_ZERO:
        valid &= c < box.size[axis]
    return np.where(valid, index, 0), valid


def pad_box(values: np.ndarray, grid: Grid, box: Box, width: int = HALO) -> np.ndarray:
    """Copy of the box cells of a global field with ``width`` halo layers per face."""
    idx, masks = [], []
    for axis in reversed(range(grid.ndim)):
        ind, valid = padded_axis_map(grid, box, axis, width)
        idx.append(ind)
        masks.append(valid)
    out = values[np.ix_(*idx)]
    if not all(m.all() for m in masks):
        mask = masks[0]
        for m in masks[1:]:
            mask = np.multiply.outer(mask, m)
        out = np.where(mask, out, 0.0)
    return out


def global_box(grid: Grid) -> Box:
    return Box(tuple(0 for _ in range(grid.ndim)), tuple(grid.counts),
               tuple((FACE_HALO, FACE_HALO) for _ in range(grid.ndim)))


@dataclass(frozen=True)
class Subdomain:
    index: int
    coords: tuple[int, ...]
    owned: tuple[tuple[int, int], ...]
    neighbors: tuple[int, ...]

    @property
    def size(self) -> tuple[int, ...]:
        return tuple(hi - lo for lo, hi in self.owned)

    @property
    def ncells(self) -> int:
        return math.prod(self.size)

    def owned_box(self) -> Box:
        """Owned cells; halos come from neighbours through the grid bc."""
        return Box(tuple(lo for lo, _ in self.owned), self.size,
                   tuple((FACE_HALO, FACE_HALO) for _ in self.owned))

    def extended_box(self, grid: Grid, overlap: int) -> Box:
        """Owned box grown by ``3 * overlap`` layers per face.

        Periodic axes wrap; if the grown box covers the whole axis it becomes the
        full periodic axis.  Neumann-type axes are clipped at the physical
        boundary, where the face keeps the mirror condition.
        """
        layers = HALO * overlap
        starts, sizes, faces = [], [], []
        for axis, (lo, hi) in enumerate(self.owned):
            n = grid.counts[axis]
            if grid.bc is BoundaryKind.PERIODIC:
                if (hi - lo) + 2 * layers >= n:
                    starts.append(0)
                    sizes.append(n)
                    faces.append((FACE_HALO, FACE_HALO))
                else:
                    starts.append(lo - layers)
                    sizes.append(hi - lo + 2 * layers)
                    faces.append((FACE_ZERO, FACE_ZERO))
            else:
                a, b = max(0, lo - layers), min(n, hi + layers)
                starts.append(a)
                sizes.append(b - a)
                faces.append((FACE_HALO if a == 0 else FACE_ZERO,
                              FACE_HALO if b == n else FACE_ZERO))
        return Box(tuple(starts), tuple(sizes), tuple(faces))


@dataclass(frozen=True)
class Partition:
    grid: Grid
    dims: tuple[int, ...]
    subdomains: tuple[Subdomain, ...]

    @property
    def np(self) -> int:
        return len(self.subdomains)

    def owner_map(self) -> np.ndarray:
        """Owning subdomain index of every cell (numpy layout)."""
        owner = np.full(self.grid.shape, -1, dtype=np.int64)
        for sd in self.subdomains:
            owner[sd.owned_box().contains(self.grid)] = sd.index
        return owner


def _split(n: int, p: int) -> list[tuple[int, int]]:
    base, extra = divmod(n, p)
    bounds, lo = [], 0
    for k in range(p):
        hi = lo + base + (1 if k < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def _factorizations(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for d in range(1, n + 1):
        if n % d == 0:
            for rest in _factorizations(n // d, parts - 1):
                yield (d,) + rest


def _max_surface_to_volume(grid: Grid, dims: tuple[int, ...]) -> Fraction:
    worst = Fraction(0)
    splits = [_split(n, p) for n, p in zip(grid.counts, dims)]
    for combo in itertools.product(*splits):
        sizes = [hi - lo for lo, hi in combo]
        vol = math.prod(sizes)
        surface = sum(2 * vol // s for s in sizes) if grid.ndim > 1 else 2
        worst = max(worst, Fraction(surface, vol))
    return worst


def partition_domain(grid: Grid, np_: int) -> Partition:
    """Balanced Cartesian partition of ``grid`` into ``np_`` subdomains.

    The processor grid minimises the largest surface-to-volume ratio; ties go
    to the decomposition with more parts along the slowest-varying axis.
    Every owned box has at least 4 cells per axis.
    """
    if int(np_) != np_ or np_ < 1:
        raise ValueError(f"number of subdomains must be a positive integer, got {np_}")
    np_ = int(np_)
    best, best_key = None, None
    for dims in _factorizations(np_, grid.ndim):
        if any(n // p < MIN_BOX for n, p in zip(grid.counts, dims)):
            continue
        key = (_max_surface_to_volume(grid, dims), tuple(-p for p in reversed(dims)))
        if best_key is None or key < best_key:
            best, best_key = dims, key
    if best is None:
        raise ValueError(
            f"cannot split grid {grid.counts} into {np_} subdomains with boxes of at least {MIN_BOX} cells per axis")

    splits = [_split(n, p) for n, p in zip(grid.counts, best)]
    periodic = grid.bc is BoundaryKind.PERIODIC

    def linear(coords):
        k, stride = 0, 1
        for c, p in zip(coords, best):
            k += c * stride
            stride *= p
        return k

    subdomains = []
    # x fastest over the processor grid, matching the cell ordering
    for coords_rev in itertools.product(*[range(p) for p in reversed(best)]):
        coords = tuple(reversed(coords_rev))
        neighbors = set()
        for axis, p in enumerate(best):
            for step in (-1, 1):
                c = coords[axis] + step
                if periodic:
                    c %= p
                elif not 0 <= c < p:
                    continue
                other = list(coords)
                other[axis] = c
                neighbors.add(linear(other))
        index = linear(coords)
        neighbors.discard(index)
        owned = tuple(splits[axis][coords[axis]] for axis in range(grid.ndim))
        subdomains.append(Subdomain(index, coords, owned, tuple(sorted(neighbors))))
    subdomains.sort(key=lambda sd: sd.index)
    return Partition(grid, tuple(best), tuple(subdomains))


# ----------------------------------------------------------------------------
# Fields and halo exchange
# ----------------------------------------------------------------------------

@dataclass
class Field:
    """Scalar cell field stored with ``HALO`` ghost layers on every face."""

    grid: Grid
    data: np.ndarray

    @classmethod
    def from_values(cls, grid: Grid, values) -> "Field":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"expected values of shape {grid.shape}, got {values.shape}")
        data = np.zeros(tuple(n + 2 * HALO for n in grid.shape))
        field = cls(grid, data)
        field.values[...] = values
        return exchange_halos(field)

    @property
    def values(self) -> np.ndarray:
        return self.data[tuple(slice(HALO, HALO + n) for n in self.grid.shape)]


def pad(values: np.ndarray, grid: Grid, width: int = HALO) -> np.ndarray:
    """Global field with halos filled through the boundary condition."""
    mode = "wrap" if grid.bc is BoundaryKind.PERIODIC else "symmetric"
    return np.pad(values, width, mode=mode)


def exchange_halos(field: Field, partition: Partition | None = None) -> Field:
    """Fill the halo layers of ``field`` in place and return it.

    Periodic grids wrap around; Neumann-type grids use even reflection, the
    ghost at distance m outside a face equalling the value at distance m inside.
    With a ``partition`` the halos are gathered face by face from the owning
    subdomains, which yields the same values.
    """
    if partition is None or partition.np == 1:
        field.data[...] = pad(field.values, field.grid)
        return field
    values = field.values.copy()
    padded = pad(values, field.grid)
    for sd, block in zip(partition.subdomains, subdomain_blocks(values, partition)):
        sl = tuple(slice(lo, hi + 2 * HALO) for lo, hi in reversed(sd.owned))
        padded[sl] = block
    field.data[...] = padded
    return field


def subdomain_blocks(values: np.ndarray, partition: Partition) -> list[np.ndarray]:
    """Each subdomain's owned values plus halos filled from the owning neighbours."""
    return [pad_box(values, partition.grid, sd.owned_box()) for sd in partition.subdomains]


def gather(blocks: Sequence[np.ndarray], partition: Partition) -> np.ndarray:
    """Reassemble per-subdomain owned values (no halos) into a global field."""
    out = np.empty(partition.grid.shape)
    for sd, block in zip(partition.subdomains, blocks):
        out[tuple(slice(lo, hi) for lo, hi in reversed(sd.owned))] = block
    return out


# ----------------------------------------------------------------------------
# Deterministic reductions
# ----------------------------------------------------------------------------

_LEAF = 4096


def reduce_sum(values, partition: Partition | None = None) -> float:
    """Deterministic sum of per-cell values.

    ``values`` is a global array, or a list of per-subdomain owned blocks when
    ``partition`` is given.  Leaves are fixed runs of the global x-fastest
    ordering, combined by a fixed pairwise tree, so the result does not depend
    on the number of subdomains or on worker scheduling.
    """
    if partition is not None and not isinstance(values, np.ndarray):
        values = gather(values, partition)
    flat = np.ascontiguousarray(values, dtype=float).ravel()
    if flat.size == 0:
        return 0.0
    partial = [float(np.sum(flat[i:i + _LEAF])) for i in range(0, flat.size, _LEAF)]
    while len(partial) > 1:
        partial = [partial[i] + partial[i + 1] if i + 1 < len(partial) else partial[i]
                   for i in range(0, len(partial), 2)]
    return partial[0]


def dot(u: np.ndarray, v: np.ndarray) -> float:
    return reduce_sum(u * v)


def norm(u: np.ndarray) -> float:
    return math.sqrt(reduce_sum(u * u))
