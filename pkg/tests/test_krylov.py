import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from pfcnks.krylov import gmres_right_preconditioned


def random_system(n, seed, shift=3.0):
    r = np.random.default_rng(seed)
    a = r.standard_normal((n, n)) / np.sqrt(n) + shift * np.eye(n)
    return a, r.standard_normal(n)


def test_identity_one_iteration():
    b = np.arange(1.0, 11.0)
    x, rep = gmres_right_preconditioned(lambda v: v, None, b, 1e-10, 0.0)
    assert rep.iterations == 1 and rep.converged
    assert np.allclose(x, b)


def test_exact_preconditioner_one_iteration():
    a, b = random_system(40, 1, shift=0.5)
    ainv = np.linalg.inv(a)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, lambda v: ainv @ v, b, 1e-10, 0.0)
    assert rep.iterations == 1 and rep.converged
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_zero_rhs():
    x, rep = gmres_right_preconditioned(lambda v: 2 * v, None, np.zeros(5), 1e-3, 1e-11)
    assert rep.converged and rep.iterations == 0 and not x.any()


@given(n=st.integers(2, 60), seed=st.integers(0, 2 ** 31), restart=st.integers(2, 40))
def test_converged_means_true_residual_below_target(n, seed, restart):
    a, b = random_system(n, seed)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, None, b, 1e-8, 1e-14, restart=restart, maxit=2000)
    true = np.linalg.norm(a @ x - b)
    assert rep.converged
    assert true <= max(1e-8 * np.linalg.norm(b), 1e-14) * (1 + 1e-6)
    assert np.isclose(rep.residual, true, rtol=1e-6, atol=1e-15)


@given(seed=st.integers(0, 2 ** 31))
def test_right_preconditioning_solves_original_system(seed):
    """Whatever the preconditioner, the returned x solves A x = b to tolerance."""
    a, b = random_system(30, seed, shift=1.0)
    m = np.random.default_rng(seed + 1).uniform(0.5, 2.0, 30)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, lambda v: v * m, b, 1e-9, 0.0, restart=30, maxit=200)
    assert rep.converged
    assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b) * (1 + 1e-6)


def test_happy_breakdown_is_verified_convergence():
    # A has two distinct eigenvalues: the Krylov space is exhausted after 2 steps
    n = 50
    a = np.diag(np.r_[np.full(25, 2.0), np.full(25, 5.0)])
    b = np.ones(n)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, None, b, 1e-14, 0.0, restart=30)
    assert rep.converged and rep.breakdown and rep.iterations == 2
    assert np.allclose(a @ x, b, rtol=1e-13)


def test_maxit_exceeded_reports_failure():
    n = 200
    a = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)).tocsr()
    b = np.ones(n)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, None, b, 1e-12, 0.0, restart=5, maxit=20)
    assert not rep.converged and rep.iterations == 20
    assert rep.residual == pytest.approx(np.linalg.norm(a @ x - b), rel=1e-8)


def test_initial_guess_used():
    a, b = random_system(20, 7)
    xs = np.linalg.solve(a, b)
    x, rep = gmres_right_preconditioned(lambda v: a @ v, None, b, 1e-6, 1e-8, x0=xs)
    # the target is relative to the initial residual, which is already tiny
    assert rep.iterations <= 1 and np.allclose(x, xs)


def test_matches_scipy_gmres_on_laplacian():
    import scipy.sparse.linalg as spla
    n = 100
    a = (sp.diags([-1.0, 2.2, -1.0], [-1, 0, 1], shape=(n, n))).tocsr()
    b = np.sin(np.arange(n))
    x, rep = gmres_right_preconditioned(lambda v: a @ v, None, b, 1e-10, 0.0, restart=20, maxit=5000)
    ref = spla.spsolve(a.tocsc(), b)
    assert rep.converged and np.allclose(x, ref, rtol=1e-8, atol=1e-9)
