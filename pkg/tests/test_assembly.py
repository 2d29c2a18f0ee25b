import itertools

import numpy as np
import pytest
import scipy.sparse as sps

from xvem.assembly import (CondensedSystem, GlobalSystem, SolverError, apply_dirichlet, assemble,
                           condition_estimate, lanczos_extremes, solve, solve_problem, static_condense)
from xvem.discretization import Discretization, evaluate_dofs
from xvem.mesh import Mesh
from xvem.problems import PolynomialSolution


def raw_system(S, rhs):
    n = S.shape[0]
    glob = GlobalSystem(None, S, rhs, np.zeros(n, bool), np.zeros(n))
    return CondensedSystem(sps.csr_matrix(S), rhs, np.arange(n), np.zeros(0, int), sps.csr_matrix((0, 0)),
                           sps.csr_matrix((0, n)), np.zeros(0), glob)


def test_unit_square_k1_consistency():
    mesh = Mesh(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]), [[0, 1, 2, 3]])
    loc = Discretization(mesh, 1).locals[0]
    expected = np.zeros((5, 5))
    expected[:4, :4] = 0.5 * np.array([[1, 0, -1, 0], [0, 1, 0, -1], [-1, 0, 1, 0], [0, -1, 0, 1]])
    np.testing.assert_allclose(loc.consistency(), expected, atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_global_matrix_symmetric_with_constant_kernel(fracture4, frac_space, disc_factory, k):
    disc = disc_factory(fracture4, k, frac_space, "local", 0.15)
    A = assemble(disc).A
    assert abs(A - A.T).max() < 1e-13 * abs(A).max()
    one = evaluate_dofs(disc, lambda p, r: np.ones(len(p)))
    assert np.abs(A @ one).max() < 1e-11 * abs(A).max()


def test_sparsity_matches_element_cliques(fracture4, disc_factory):
    disc = disc_factory(fracture4, 2)
    A = assemble(disc).A
    pairs = set()
    for dofs in disc.element_dofs:
        pairs.update(itertools.product(dofs.tolist(), repeat=2))
    assert A.nnz == len(pairs)


def test_condensed_solution_equals_full_solve(rng):
    mesh = Mesh(np.array([[0.0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]]), [[0, 1, 4, 5], [1, 2, 3, 4]])
    disc = Discretization(mesh, 3)
    f = lambda p, r: np.cos(p[:, 0]) * (1 + p[:, 1])
    g = lambda p, r: p[:, 0] ** 2 - p[:, 1]
    system = apply_dirichlet(assemble(disc, f), g)
    res = solve(static_condense(system))
    A, b = system.A.toarray(), system.rhs
    free = ~system.fixed
    u = system.values.copy()
    u[free] = np.linalg.solve(A[np.ix_(free, free)], b[free] - A[np.ix_(free, system.fixed)] @ u[system.fixed])
    np.testing.assert_allclose(res.u, u, atol=1e-12)


def test_dirichlet_values_are_kept(fracture4, disc_factory):
    disc = disc_factory(fracture4, 2)
    g = lambda p, r: 1 + p[:, 0]
    res = solve_problem(disc, lambda p, r: np.zeros(len(p)), g)
    np.testing.assert_allclose(res.u, evaluate_dofs(disc, g), atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_polynomial_patch(fracture8, disc_factory, rng, k):
    disc = disc_factory(fracture8, k)
    q = PolynomialSolution.random(k, rng)
    res = solve_problem(disc, q.source, q.value)
    Iq = evaluate_dofs(disc, q.value)
    assert np.abs(res.u - Iq).max() < 1e-10


def test_identity_system():
    b = np.arange(1.0, 6.0)
    for solver in ("direct", "krylov"):
        res = solve(raw_system(sps.identity(5, format="csr"), b), solver)
        np.testing.assert_allclose(res.u, b)
        assert res.cond == pytest.approx(1.0)


def test_random_spd(rng):
    X = rng.standard_normal((50, 50))
    S = X @ X.T + 50 * np.eye(50)
    b = rng.standard_normal(50)
    exact = np.linalg.solve(S, b)
    ev = np.linalg.eigvalsh(S)
    for solver in ("direct", "krylov"):
        res = solve(raw_system(sps.csr_matrix(S), b), solver, tol=1e-12)
        np.testing.assert_allclose(res.u, exact, rtol=1e-9)
        assert res.cond == pytest.approx(ev[-1] / ev[0], rel=1e-10)


def test_krylov_failure_raises(rng):
    X = rng.standard_normal((50, 50))
    S = sps.csr_matrix(X @ X.T + 1e-3 * np.eye(50))
    with pytest.raises(SolverError) as info:
        solve(raw_system(S, rng.standard_normal(50)), "krylov", tol=1e-12, maxiter=2)
    assert info.value.residual > 1e-12


def test_unknown_solver():
    with pytest.raises(ValueError):
        solve(raw_system(sps.identity(3, format="csr"), np.ones(3)), "gmres")


def test_condense_requires_dirichlet(fracture4, disc_factory):
    with pytest.raises(ValueError):
        static_condense(assemble(disc_factory(fracture4, 1)))


def test_lanczos_condition_of_laplacian():
    n = 400
    S = sps.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    j = np.arange(1, n + 1)
    ev = 2 - 2 * np.cos(j * np.pi / (n + 1))
    est = condition_estimate(S)
    assert est == pytest.approx(ev[-1] / ev[0], rel=0.02)
    assert est <= ev[-1] / ev[0] * (1 + 1e-10)  # Ritz values lie inside the spectrum


def test_lanczos_exact_on_small_spectrum():
    d = np.array([1.0, 2.0, 3.0, 10.0])
    lo, hi = lanczos_extremes(lambda v: d * v, 4, 10)
    assert (lo, hi) == (pytest.approx(1.0), pytest.approx(10.0))
