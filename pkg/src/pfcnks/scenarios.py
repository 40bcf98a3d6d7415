"""Initial densities for the benchmark problems.

All initializers are pure functions of global cell-centre coordinates (and a
seed), so they give identical fields whatever the domain partition.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, reduce_sum


class Scenario(str, enum.Enum):
    RANDOM_QUENCH = "random_quench"
    SINE = "sine"
    POLYCRYSTAL_2D = "polycrystal2d"
    CRACK_2D = "crack2d"
    POLYCRYSTAL_3D = "polycrystal3d"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"a": cls.RANDOM_QUENCH, "random": cls.RANDOM_QUENCH, "random_quench": cls.RANDOM_QUENCH,
                   "quench": cls.RANDOM_QUENCH, "sine": cls.SINE, "sine_smooth": cls.SINE,
                   "b": cls.POLYCRYSTAL_2D, "polycrystal2d": cls.POLYCRYSTAL_2D,
                   "polycrystal_2d": cls.POLYCRYSTAL_2D, "c": cls.CRACK_2D, "crack": cls.CRACK_2D,
                   "crack2d": cls.CRACK_2D, "crack_2d": cls.CRACK_2D, "d": cls.POLYCRYSTAL_3D,
                   "polycrystal3d": cls.POLYCRYSTAL_3D, "polycrystal_3d": cls.POLYCRYSTAL_3D}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scenario {value!r}") from None


# Model and step-size defaults per scenario: gamma, dt_min, dt_max, eta.
SCENARIO_DEFAULTS = {
    Scenario.RANDOM_QUENCH: dict(gamma=0.025, dt_min=0.01, dt_max=20.0, eta=4.0e5),
    Scenario.SINE: dict(gamma=0.025, dt_min=0.01, dt_max=0.01, eta=0.0),
    Scenario.POLYCRYSTAL_2D: dict(gamma=0.25, dt_min=0.02, dt_max=10.0, eta=5000.0),
    Scenario.CRACK_2D: dict(gamma=1.0, dt_min=1.0, dt_max=5.0, eta=100.0),
    Scenario.POLYCRYSTAL_3D: dict(gamma=0.35, dt_min=0.5, dt_max=10.0, eta=500.0),
}


@dataclass
class ScenarioSpec:
    scenario: Scenario = Scenario.RANDOM_QUENCH
    phi_bar: float | None = None          # None: the scenario's own mean density
    noise_amp: float = 0.07
    seed: int = 0
    amplitude: float | None = None
    q_x: float | None = None
    q_y: float | None = None
    # crystallites: relative centres (fractions of the domain), angles, patch size / sphere radius
    centers: tuple = ()
    angles: tuple = ()
    patch_size: float = 25.0
    radius: float = 5.0 * math.pi
    notch: tuple[int, int] = (40, 20)     # cells along x and y
    liquid: float = 0.79
    sine_period: float = 32.0

    def __post_init__(self):
        self.scenario = Scenario.parse(self.scenario)
        if self.noise_amp < 0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.noise_amp}")


# ----------------------------------------------------------------------------


def init_random_quench(grid: Grid, phi_bar: float, noise_amp: float, seed: int = 0) -> np.ndarray:
    """``phi_bar`` plus uniform noise in ``[-a, a]``, re-centred to zero mean.

    Value ``k`` of a Philox stream keyed by ``seed`` goes to global cell ``k``
    (x fastest), so the field never depends on the partition.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    noise = rng.uniform(-noise_amp, noise_amp, grid.size).reshape(grid.shape)
    noise -= reduce_sum(noise) / grid.size
    return phi_bar + noise


def init_sine(grid: Grid, period: float = 32.0) -> np.ndarray:
    x, y = grid.coordinates()[:2]
    k = 2.0 * math.pi / period
    return 0.5 * np.sin(k * x) * np.sin(k * y) * np.ones(grid.shape)


def rotate(x, y, omega: float):
    c, s = math.cos(omega), math.sin(omega)
    return c * x - s * y, s * x + c * y


def hexagonal_lattice(x, y, phi_bar: float, amplitude: float, q_x: float, q_y: float,
                      omega: float = 0.0, center=(0.0, 0.0)):
    """Hexagonal density ``phi_bar + A[cos(q_y y/sqrt3) cos(q_x x) - cos(2 q_y y/sqrt3)/2]``.

    Evaluated in coordinates rotated by ``omega`` about ``center``.
    """
    xt, yt = rotate(np.asarray(x, float) - center[0], np.asarray(y, float) - center[1], omega)
    s3 = math.sqrt(3.0)
    return phi_bar + amplitude * (np.cos(q_y * yt / s3) * np.cos(q_x * xt)
                                  - 0.5 * np.cos(2.0 * q_y * yt / s3))


_POLY2D_CENTERS = ((0.5, 0.75), (0.25, 0.25), (0.75, 0.25))
_POLY2D_ANGLES = (-math.pi / 4, 0.0, math.pi / 4)


def init_polycrystal2d(grid: Grid, spec: ScenarioSpec | None = None) -> np.ndarray:
    spec = spec or ScenarioSpec(Scenario.POLYCRYSTAL_2D)
    phi_bar = 0.285 if spec.phi_bar is None else spec.phi_bar
    amp = 0.446 if spec.amplitude is None else spec.amplitude
    qx = 0.66 if spec.q_x is None else spec.q_x
    qy = 0.66 if spec.q_y is None else spec.q_y
    rel = spec.centers or _POLY2D_CENTERS
    angles = spec.angles or _POLY2D_ANGLES
    if len(rel) != len(angles):
        raise ValueError("need one rotation angle per crystallite")
    half = 0.5 * spec.patch_size
    lx, ly = grid.lengths[:2]
    centers = [(cx * lx, cy * ly) for cx, cy in rel]
    boxes = []
    for (cx, cy) in centers:
        if cx - half < 0 or cy - half < 0 or cx + half > lx or cy + half > ly:
            raise ValueError(f"crystallite patch at ({cx:g}, {cy:g}) leaves the domain")
        boxes.append((cx - half, cx + half, cy - half, cy + half))
    for i, a in enumerate(boxes):
        for b in boxes[i + 1:]:
            if a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]:
                raise ValueError("crystallite patches overlap")
    x, y = grid.coordinates()[:2]
    x = np.broadcast_to(x, grid.shape)
    y = np.broadcast_to(y, grid.shape)
    phi = np.full(grid.shape, phi_bar)
    for (cx, cy), omega, (x0, x1, y0, y1) in zip(centers, angles, boxes):
        inside = (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
        phi[inside] = hexagonal_lattice(x[inside], y[inside], phi_bar, amp, qx, qy, omega, (cx, cy))
    return phi


def init_crack2d(grid: Grid, spec: ScenarioSpec | None = None) -> np.ndarray:
    spec = spec or ScenarioSpec(Scenario.CRACK_2D)
    phi_bar = 0.49 if spec.phi_bar is None else spec.phi_bar
    amp = 1.0 if spec.amplitude is None else spec.amplitude
    qx = math.sqrt(3.0) / 2.0 if spec.q_x is None else spec.q_x
    qy = 0.9 * qx if spec.q_y is None else spec.q_y
    nx, ny = grid.counts[:2]
    wx, wy = spec.notch
    if wx > nx or wy > ny or wx < 0 or wy < 0:
        raise ValueError(f"notch of {wx}x{wy} cells does not fit in a {nx}x{ny} mesh")
    x, y = grid.coordinates()[:2]
    phi = hexagonal_lattice(x, y, phi_bar, amp, qx, qy) * np.ones(grid.shape)
    i0, j0 = (nx - wx) // 2, (ny - wy) // 2
    phi[j0:j0 + wy, i0:i0 + wx] = spec.liquid
    return phi


def bcc(x, y, z, q: float):
    cx, cy, cz = np.cos(q * x), np.cos(q * y), np.cos(q * z)
    return cx * cy + cx * cz + cy * cz


def bump(r, d0: float):
    """``(1 - (r/d0)^2)^2`` inside the sphere of radius ``d0``, zero outside."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= d0, (1.0 - (r / d0) ** 2) ** 2, 0.0)


_POLY3D_CENTERS = ((0.5, 0.75, 0.5), (0.25, 0.25, 0.5), (0.75, 0.25, 0.5))
_POLY3D_ANGLES = (0.0, -math.pi / 8, math.pi / 8)


def init_polycrystal3d(grid: Grid, spec: ScenarioSpec | None = None) -> np.ndarray:
    if grid.ndim != 3:
        raise ValueError("the 3D polycrystal needs a 3D grid")
    spec = spec or ScenarioSpec(Scenario.POLYCRYSTAL_3D)
    phi_bar = -0.35 if spec.phi_bar is None else spec.phi_bar
    amp = 1.0 if spec.amplitude is None else spec.amplitude
    q = 1.0 / math.sqrt(2.0) if spec.q_x is None else spec.q_x
    rel = spec.centers or _POLY3D_CENTERS
    angles = spec.angles or _POLY3D_ANGLES
    if len(rel) != len(angles):
        raise ValueError("need one rotation angle per crystallite")
    d0 = spec.radius
    centers = [tuple(c * length for c, length in zip(cr, grid.lengths)) for cr in rel]
    for c in centers:
        if any(v - d0 < 0 or v + d0 > length for v, length in zip(c, grid.lengths)):
            raise ValueError(f"crystallite sphere at {tuple(round(v, 6) for v in c)} leaves the domain")
    x, y, z = grid.coordinates()
    phi = np.full(grid.shape, phi_bar)
    for (x0, y0, z0), omega in zip(centers, angles):
        dx, dy, dz = x - x0, y - y0, z - z0
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        xt, yt = rotate(dx, dy, omega)
        phi = phi + amp * bump(r, d0) * bcc(xt, yt, dz, q)
    return phi


def initial_field(grid: Grid, spec: ScenarioSpec) -> np.ndarray:
    s = spec.scenario
    if s is Scenario.RANDOM_QUENCH:
        phi_bar = 0.07 if spec.phi_bar is None else spec.phi_bar
        return init_random_quench(grid, phi_bar, spec.noise_amp, spec.seed)
    if s is Scenario.SINE:
        return init_sine(grid, spec.sine_period)
    if s is Scenario.POLYCRYSTAL_2D:
        return init_polycrystal2d(grid, spec)
    if s is Scenario.CRACK_2D:
        return init_crack2d(grid, spec)
    return init_polycrystal3d(grid, spec)
