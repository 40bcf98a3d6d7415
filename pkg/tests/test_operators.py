import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pfcnks.grid import create_grid, pad, reduce_sum
from pfcnks.operators import (MobilityDomainError, MobilityKind, biharmonic, diff_one_sided,
                              diff_second, div_mobility_grad, laplacian, mobility, trim)


def brute_laplacian(v, h):
    """Periodic 2D five-point Laplacian by explicit loops (numpy layout [y, x])."""
    ny, nx = v.shape
    out = np.empty_like(v)
    for j in range(ny):
        for i in range(nx):
            out[j, i] = ((v[j, (i + 1) % nx] - 2 * v[j, i] + v[j, (i - 1) % nx]) / h[0] ** 2
                         + (v[(j + 1) % ny, i] - 2 * v[j, i] + v[(j - 1) % ny, i]) / h[1] ** 2)
    return out


def brute_div_m_grad(g, phi, h, kind):
    ny, nx = g.shape
    m = mobility(phi, kind)
    out = np.zeros_like(g)
    for j, i in itertools.product(range(ny), range(nx)):
        for (dj, di), hh in (((0, 1), h[0]), ((1, 0), h[1])):
            jp, ip = (j + dj) % ny, (i + di) % nx
            jm, im = (j - dj) % ny, (i - di) % nx
            mp = 0.5 * (m[j, i] + m[jp, ip])
            mm = 0.5 * (m[j, i] + m[jm, im])
            out[j, i] += (mp * (g[jp, ip] - g[j, i]) - mm * (g[j, i] - g[jm, im])) / hh ** 2
    return out


def test_one_sided_differences():
    g = create_grid(1, (8.0,), (8,))
    v = np.arange(8.0) ** 2
    p = pad(v, g, 1)
    assert np.allclose(diff_one_sided(p, g.spacings, 0, "+")[:-1], np.diff(v))
    assert np.allclose(diff_one_sided(p, g.spacings, 0, "-")[1:], np.diff(v))
    with pytest.raises(ValueError):
        diff_one_sided(p, g.spacings, 0, "x")


def test_diff_second_quadratic_exact():
    g = create_grid(1, (8.0,), (16,), "periodic")
    h = g.spacings[0]
    x = np.concatenate([[g.centers(0)[0] - h], g.centers(0), [g.centers(0)[-1] + h]])
    p = x * x
    assert np.allclose(diff_second(p, g.spacings, 0), 2.0)


def test_laplacian_matches_loop_oracle(rng):
    g = create_grid(2, (5.0, 3.0), (10, 8))
    v = rng.standard_normal(g.shape)
    assert np.allclose(laplacian(pad(v, g, 1), g.spacings), brute_laplacian(v, g.spacings), rtol=1e-13)


def test_laplacian_of_constant_is_zero():
    for bc in ("periodic", "neumann"):
        g = create_grid(3, (1, 2, 3), (8, 8, 8), bc)
        assert np.abs(laplacian(pad(np.full(g.shape, 0.3), g, 1), g.spacings)).max() < 1e-12


def test_laplacian_second_order():
    errs = []
    for n in (16, 32, 64):
        g = create_grid(2, (2 * math.pi, 2 * math.pi), (n, n))
        x, y = g.coordinates()[:2]
        f = np.sin(x) * np.cos(2 * y)
        err = laplacian(pad(f, g, 1), g.spacings) + 5 * f
        errs.append(np.abs(err).max())
    for a, b in zip(errs, errs[1:]):
        assert 4 * 0.85 <= a / b <= 4 * 1.15


@given(arrays(np.float64, (8, 8), elements=st.floats(-1, 1)),
       arrays(np.float64, (8, 8), elements=st.floats(-1, 1)))
def test_laplacian_self_adjoint(u, v):
    g = create_grid(2, (4.0, 4.0), (8, 8))
    lu = laplacian(pad(u, g, 1), g.spacings)
    lv = laplacian(pad(v, g, 1), g.spacings)
    lhs, rhs = reduce_sum(lu * v), reduce_sum(u * lv)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(lu * v).sum())


@pytest.mark.parametrize("ndim", [1, 2, 3])
def test_biharmonic_fused_equals_two_passes(ndim, rng):
    g = create_grid(ndim, (3.0,) * ndim, (8,) * ndim)
    p = pad(rng.standard_normal(g.shape), g, 2)
    a = biharmonic(p, g.spacings)
    b = trim(biharmonic(p, g.spacings, fused=True), 0)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(a).max())


def test_div_mobility_grad_constant_is_laplacian(rng):
    g = create_grid(2, (3.0, 3.0), (12, 12))
    v = pad(rng.standard_normal(g.shape), g, 1)
    phi = pad(rng.uniform(-0.5, 0.5, g.shape), g, 1)
    assert np.allclose(div_mobility_grad(v, phi, g.spacings), laplacian(v, g.spacings), rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", list(MobilityKind))
def test_div_mobility_grad_of_constant_is_zero(kind, rng):
    g = create_grid(2, (3.0, 3.0), (8, 8))
    phi = pad(rng.uniform(-0.9, 0.9, g.shape), g, 1)
    out = div_mobility_grad(np.full(phi.shape, 2.0), phi, g.spacings, kind)
    assert np.abs(out).max() == 0.0


def test_div_mobility_grad_matches_edge_flux_oracle(rng):
    from pfcnks.scenarios import hexagonal_lattice
    g = create_grid(2, (16.0, 16.0), (16, 16))
    x, y = g.coordinates()[:2]
    phi = hexagonal_lattice(x, y, 0.285, 0.446, 0.66, 0.66) * np.ones(g.shape)
    gv = rng.standard_normal(g.shape)
    kind = MobilityKind.ONE_MINUS_PHI_SQUARED
    ours = div_mobility_grad(pad(gv, g, 1), pad(phi, g, 1), g.spacings, kind)
    assert np.allclose(ours, brute_div_m_grad(gv, phi, g.spacings, kind), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kind", list(MobilityKind))
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_div_mobility_grad_conservative(kind, seed):
    r = np.random.default_rng(seed)
    g = create_grid(2, (7.0, 5.0), (12, 10))
    gv, phi = r.standard_normal(g.shape), r.uniform(-0.95, 0.95, g.shape)
    out = div_mobility_grad(pad(gv, g, 1), pad(phi, g, 1), g.spacings, kind)
    scale = np.abs(out).sum()
    assert abs(reduce_sum(out)) * g.cell_volume <= 1e-12 * scale * g.cell_volume


def test_variable_mobility_domain_error():
    with pytest.raises(MobilityDomainError):
        mobility(np.array([0.2, -1.0]), MobilityKind.ONE_MINUS_PHI_SQUARED)
    assert np.array_equal(mobility(np.array([0.5]), MobilityKind.parse("variable")), [0.75])
    with pytest.raises(ValueError):
        MobilityKind.parse("quadratic")
