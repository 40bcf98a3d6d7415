import numpy as np
import pytest

from oracles import desk_quench_jacobian, extracted_subdomain_matrix, interior_rows
from pfcnks.energy import ModelParams
from pfcnks.grid import create_grid, partition_domain
from pfcnks.jacobian import assemble_jacobian
from pfcnks.krylov import gmres_right_preconditioned
from pfcnks.newton import NewtonConfig, newton_solve
from pfcnks.schwarz import (SchwarzConfig, SchwarzPreconditioner, StaleFactorizationError, Variant,
                            apply_preconditioner, build_subdomain_matrices, factorize_operator,
                            refresh_or_reuse)


def make(n=32, np_=4, **cfg):
    g, phi, p, jac = desk_quench_jacobian(n)
    config = SchwarzConfig(**cfg)
    part = partition_domain(g, np_)
    ops = build_subdomain_matrices(phi, phi, 0.01, g, p, part, config)
    for op in ops:
        factorize_operator(op, config.subsolver)
    return g, jac, config, ops


def test_config_validation():
    with pytest.raises(ValueError):
        SchwarzConfig(overlap=3)
    with pytest.raises(ValueError):
        SchwarzConfig(subsolver="ilu3")
    with pytest.raises(ValueError):
        Variant.parse("multiplicative")
    assert SchwarzConfig("left-RAS").variant is Variant.LRAS


def test_single_subdomain_equals_global_jacobian():
    g, jac, config, ops = make(16, 1, overlap=0, subsolver="lu")
    a = ops[0].matrix
    assert np.array_equal(a.indptr, jac.indptr) and np.array_equal(a.indices, jac.indices)
    assert np.array_equal(a.data, jac.data)


@pytest.mark.parametrize("bc", ["periodic", "neumann"])
def test_interior_rows_match_extraction(bc):
    g = create_grid(2, (8.0, 8.0), (16, 16), bc)
    rng = np.random.default_rng(3)
    b = rng.uniform(-0.5, 0.5, g.shape)
    a = b + 0.05 * rng.standard_normal(g.shape)
    p = ModelParams(0.25, "variable")
    jac = assemble_jacobian(a, b, 0.1, g, p)
    ops = build_subdomain_matrices(a, b, 0.1, g, p, partition_domain(g, 4), SchwarzConfig(overlap=1))
    for op in ops:
        local = op.matrix.to_dense()
        ref = extracted_subdomain_matrix(jac, op)
        rows = interior_rows(g, op)
        assert rows.size > 0
        assert np.array_equal(local[rows], ref[rows])


def test_ring_rows_drop_couplings():
    g, jac, config, ops = make(16, 4, overlap=1)
    for op in ops:
        full = np.diff(jac.indptr)[op.global_index]
        local = np.diff(op.matrix.indptr)
        rows = np.setdiff1d(np.arange(op.ncells), interior_rows(g, op))
        assert np.all(local[rows] < full[rows])


@pytest.mark.parametrize("variant", list(Variant))
def test_preconditioner_linear(variant, rng):
    g, jac, config, ops = make(32, 4, variant=variant, overlap=1)
    u, v = rng.standard_normal((2, g.size))
    lhs = apply_preconditioner(config, ops, 2.0 * u - 3.0 * v)
    rhs = 2.0 * apply_preconditioner(config, ops, u) - 3.0 * apply_preconditioner(config, ops, v)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)


def test_exact_inverse_for_single_subdomain_lu(rng):
    g, jac, config, ops = make(32, 1, overlap=1, subsolver="lu")
    v = rng.standard_normal(g.size)
    y = apply_preconditioner(config, ops, v)
    assert np.linalg.norm(jac.matvec(y) - v) <= 1e-10 * np.linalg.norm(v)


def test_variants_coincide_without_overlap(rng):
    v = rng.standard_normal(32 * 32)
    outs = [apply_preconditioner(*make(32, 4, variant=var, overlap=0)[2:], v) for var in Variant]
    assert np.array_equal(outs[0], outs[1]) and np.array_equal(outs[0], outs[2])


def test_lras_each_entry_from_one_subdomain(rng):
    g, jac, config, ops = make(32, 4, variant="lras", overlap=1)
    covered = np.zeros(g.size, dtype=int)
    for op in ops:
        covered[op.global_index[op.owned_local]] += 1
    assert np.all(covered == 1)
    v = rng.standard_normal(g.size)
    y = apply_preconditioner(config, ops, v)
    parts = np.zeros(g.size)
    for op in ops:
        z = op.factorization.solve(op.restrict(v))
        parts[op.global_index[op.owned_local]] = z[op.owned_local]
    assert np.array_equal(y, parts)


def test_asm_sums_overlap_contributions(rng):
    g, jac, config, ops = make(32, 4, variant="asm", overlap=1)
    v = rng.standard_normal(g.size)
    ref = np.zeros(g.size)
    for op in ops:
        np.add.at(ref, op.global_index, op.factorization.solve(op.restrict(v)))
    assert np.allclose(apply_preconditioner(config, ops, v), ref, rtol=1e-14, atol=0)


def test_rras_restricts_owned_entries(rng):
    g, jac, config, ops = make(32, 4, variant="rras", overlap=1)
    v = rng.standard_normal(g.size)
    ref = np.zeros(g.size)
    for op in ops:
        local = np.zeros(op.ncells)
        local[op.owned_local] = v[op.global_index[op.owned_local]]
        ref[op.global_index] += op.factorization.solve(local)
    assert np.allclose(apply_preconditioner(config, ops, v), ref, rtol=1e-14, atol=0)


def test_stale_factorization_rejected():
    g, phi, p, jac = desk_quench_jacobian(16)
    pc = SchwarzPreconditioner(g, partition_domain(g, 1), SchwarzConfig(reuse=False), p)
    with pytest.raises(StaleFactorizationError):
        pc.apply(np.ones(g.size))
    pc.update(phi, phi, 0.01, new_step=True)
    pc.apply(np.ones(g.size))
    pc.invalidate()
    with pytest.raises(StaleFactorizationError):
        pc.apply(np.ones(g.size))
    reuse = SchwarzPreconditioner(g, partition_domain(g, 1), SchwarzConfig(reuse=True), p)
    refresh_or_reuse(reuse, phi, phi, 0.01, new_step=True)
    reuse.invalidate()
    reuse.apply(np.ones(g.size))


@pytest.mark.parametrize("reuse", [True, False])
def test_factorization_counting(reuse):
    g, phi, p, _ = desk_quench_jacobian(32)
    pc = SchwarzPreconditioner(g, partition_domain(g, 4), SchwarzConfig(reuse=reuse), p)
    total = 0
    for _ in range(3):
        phi, rep = newton_solve(phi, 0.01, g, p, NewtonConfig(), pc)
        assert rep.converged and rep.iterations >= 2
        total += rep.iterations
        assert rep.factorizations == (1 if reuse else rep.iterations)
    assert pc.setups == (3 if reuse else total)
    assert pc.subdomain_factorizations == 4 * pc.setups


def test_fill_level_lowers_iterations():
    g, jac, _, _ = make(32, 4)
    b = np.random.default_rng(0).standard_normal(g.size)
    its = {}
    for sub in ("ilu0", "ilu2", "lu"):
        _, _, config, ops = make(32, 4, overlap=1, subsolver=sub)
        _, rep = gmres_right_preconditioned(jac.matvec, lambda v: apply_preconditioner(config, ops, v),
                                            b, 1e-8, 0.0)
        its[sub] = rep.iterations
    assert its["lu"] <= its["ilu2"] <= its["ilu0"]
