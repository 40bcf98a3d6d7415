import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfcnks.energy import (ModelParams, Scheme, local_energy, scheme_residual, total_free_energy,
                           total_mass, variational_derivative)
from pfcnks.grid import create_grid, partition_domain, reduce_sum, subdomain_blocks
from pfcnks.operators import MobilityKind, mobility

GAMMA = 0.025


def _lap(v, h):
    ny, nx = v.shape
    out = np.zeros_like(v)
    for j, i in itertools.product(range(ny), range(nx)):
        out[j, i] = ((v[j, (i + 1) % nx] - 2 * v[j, i] + v[j, i - 1]) / h[0] ** 2
                     + (v[(j + 1) % ny, i] - 2 * v[j, i] + v[j - 1, i]) / h[1] ** 2)
    return out


def brute_local_energy(v, h, gamma):
    ny, nx = v.shape
    lap = _lap(v, h)
    out = np.zeros_like(v)
    for j, i in itertools.product(range(ny), range(nx)):
        grad = ((v[j, (i + 1) % nx] - v[j, i]) ** 2 / h[0] ** 2 + (v[j, i] - v[j, i - 1]) ** 2 / h[0] ** 2
                + (v[(j + 1) % ny, i] - v[j, i]) ** 2 / h[1] ** 2 + (v[j, i] - v[j - 1, i]) ** 2 / h[1] ** 2)
        c = v[j, i]
        out[j, i] = 0.5 * (1 - gamma) * c * c + 0.25 * c ** 4 + 0.5 * lap[j, i] ** 2 - 0.5 * grad
    return out


def brute_chem(a, b, h, gamma):
    mid = 0.5 * (a + b)
    lap = _lap(mid, h)
    return (1 - gamma) * mid + 2 * lap + _lap(lap, h) + (a ** 3 + a * a * b + a * b * b + b ** 3) / 4


def brute_residual(a, b, dt, h, params):
    chem = brute_chem(a, b, h, params.gamma)
    m = mobility(0.5 * (a + b), params.mobility)
    ny, nx = a.shape
    flux = np.zeros_like(a)
    for j, i in itertools.product(range(ny), range(nx)):
        for (dj, di), hh in (((0, 1), h[0]), ((1, 0), h[1])):
            jp, ip = (j + dj) % ny, (i + di) % nx
            jm, im = (j - dj) % ny, (i - di) % nx
            flux[j, i] += (0.5 * (m[j, i] + m[jp, ip]) * (chem[jp, ip] - chem[j, i])
                           - 0.5 * (m[j, i] + m[jm, im]) * (chem[j, i] - chem[jm, im])) / hh ** 2
    return (a - b) / dt - flux


def test_constant_field_energy():
    g = create_grid(2, (128.0, 128.0), (16, 16))
    c = 0.07
    ge = local_energy(np.full(g.shape, c), g, GAMMA)
    assert np.allclose(ge, (1 - GAMMA) * c * c / 2 + c ** 4 / 4, rtol=1e-14)
    assert abs(ge[0, 0] - 2.3948e-3) < 1e-7
    assert np.isclose(total_free_energy(np.full(g.shape, c), g, ModelParams(GAMMA)),
                      128 ** 2 * ((1 - GAMMA) * c * c / 2 + c ** 4 / 4), rtol=1e-13)
    assert total_free_energy(g.zeros(), g, GAMMA) == 0.0


def test_constant_field_mass():
    g = create_grid(2, (128.0, 128.0), (256, 256))
    assert np.isclose(total_mass(np.full(g.shape, 0.07), g), 0.07 * 128 ** 2, rtol=1e-13)
    assert total_mass(g.zeros(), g) == 0.0


def test_local_energy_matches_oracle(rng):
    g = create_grid(2, (4.0, 5.0), (8, 8))
    v = rng.uniform(-1, 1, g.shape)
    assert np.allclose(local_energy(v, g, GAMMA), brute_local_energy(v, g.spacings, GAMMA), rtol=1e-12, atol=1e-12)


def test_chem_constant_states():
    g = create_grid(2, (8.0, 8.0), (8, 8))
    c = 0.07
    out = variational_derivative(np.full(g.shape, c), np.full(g.shape, c), g, ModelParams(GAMMA))
    assert np.allclose(out, (1 - GAMMA) * c + c ** 3, rtol=1e-14)
    assert abs(out[0, 0] - 6.8593e-2) < 1e-6


def test_chem_matches_oracle(rng):
    g = create_grid(2, (4.0, 6.0), (8, 8))
    a, b = rng.uniform(-1, 1, (2,) + g.shape)
    ours = variational_derivative(a, b, g, ModelParams(GAMMA))
    assert np.allclose(ours, brute_chem(a, b, g.spacings, GAMMA), rtol=1e-12, atol=1e-10)


@pytest.mark.parametrize("kind", list(MobilityKind))
def test_residual_matches_oracle(kind, rng):
    g = create_grid(2, (6.0, 6.0), (8, 8))
    a, b = rng.uniform(-0.6, 0.6, (2,) + g.shape)
    p = ModelParams(GAMMA, kind)
    ours = scheme_residual(a, b, 0.3, g, p)
    assert np.allclose(ours, brute_residual(a, b, 0.3, g.spacings, p), rtol=1e-11, atol=1e-9)


def test_residual_constant_fixed_point():
    g = create_grid(2, (8.0, 8.0), (8, 8))
    c = np.full(g.shape, 0.3)
    assert np.abs(scheme_residual(c, c, 0.1, g, ModelParams(GAMMA))).max() < 1e-14
    with pytest.raises(ValueError):
        scheme_residual(c, c, 0.0, g, ModelParams(GAMMA))


@given(seed=st.integers(0, 2 ** 32 - 1), dt=st.floats(1e-3, 20.0))
def test_residual_mass_identity(seed, dt):
    r = np.random.default_rng(seed)
    g = create_grid(2, (8.0, 8.0), (8, 8))
    a, b = r.uniform(-0.9, 0.9, (2,) + g.shape)
    res = scheme_residual(a, b, dt, g, ModelParams(GAMMA, "variable"))
    lhs = reduce_sum(res)
    rhs = reduce_sum(a - b) / dt
    assert abs(lhs - rhs) <= 1e-12 * (np.abs(res).sum() + abs(rhs))


@pytest.mark.parametrize("bc", ["periodic", "neumann"])
@pytest.mark.parametrize("ndim", [1, 2, 3])
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_dvd_identity(bc, ndim, seed):
    r = np.random.default_rng(seed)
    g = create_grid(ndim, (5.0,) * ndim, (8,) * ndim, bc)
    a, b = r.uniform(-1, 1, (2,) + g.shape)
    p = ModelParams(GAMMA)
    lhs = total_free_energy(a, g, p) - total_free_energy(b, g, p)
    rhs = reduce_sum(variational_derivative(a, b, g, p) * (a - b)) * g.cell_volume
    assert abs(lhs - rhs) <= 1e-11 * abs(lhs)


def test_energy_gradient_matches_chem_at_equal_states(rng):
    g = create_grid(2, (8.0, 8.0), (16, 16))
    phi = rng.uniform(-0.5, 0.5, g.shape)
    v = rng.standard_normal(g.shape)
    p = ModelParams(GAMMA)
    eps = 1e-6
    fd = (total_free_energy(phi + eps * v, g, p) - total_free_energy(phi - eps * v, g, p)) / (2 * eps)
    exact = reduce_sum(variational_derivative(phi, phi, g, p) * v) * g.cell_volume
    assert abs(fd - exact) <= 1e-4 * abs(exact)


def test_implicit_euler_chem(rng):
    g = create_grid(2, (8.0, 8.0), (8, 8))
    a, b = rng.uniform(-1, 1, (2,) + g.shape)
    p = ModelParams(GAMMA, scheme=Scheme.IMPLICIT_EULER)
    assert np.allclose(variational_derivative(a, b, g, p), variational_derivative(a, a, g, ModelParams(GAMMA)))


def test_energy_partition_independent(rng):
    g = create_grid(2, (32.0, 32.0), (96, 64))
    v = rng.uniform(-1, 1, g.shape)
    e = total_free_energy(v, g, GAMMA)
    ge = local_energy(v, g, GAMMA)
    for n in (1, 4):
        part = partition_domain(g, n)
        blocks = [b[3:-3, 3:-3] for b in subdomain_blocks(ge, part)]
        assert reduce_sum(blocks, part) * g.cell_volume == e


def test_gamma_must_be_positive():
    with pytest.raises(ValueError):
        ModelParams(0.0)
