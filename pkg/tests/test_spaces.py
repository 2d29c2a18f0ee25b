import numpy as np
import pytest

from xvem.discretization import evaluate_dofs, evaluate_local_dofs
from xvem.enrichment import CornerSingularity, EnrichmentSpace, FunctionField, fracture_singularity
from xvem.mesh import Mesh, build_cartesian_fractured_mesh
from xvem.spaces import (DofLayout, Monomials, build_edge_space, build_element_moment_space, legendre_values,
                         orthonormalise)


def tip_edges(mesh):
    return [e for e in range(mesh.n_edges) if np.any(np.all(np.abs(mesh.vertices[mesh.edges[e]]) < 1e-14, axis=1))]


@pytest.mark.parametrize("k, dim", [(1, 0), (2, 1), (3, 2)])
def test_unenriched_edge_dimension(fracture4, k, dim):
    assert build_edge_space(fracture4, 0, k).n_dofs == dim


@pytest.mark.parametrize("k", [1, 2, 3])
def test_enriched_edge_orthonormal(fracture4, frac_space, k):
    for e in tip_edges(fracture4):
        es = build_edge_space(fracture4, e, k, True, frac_space)
        gram = (es.trace_values * es.rule.weights) @ es.trace_values.T
        np.testing.assert_allclose(gram, np.eye(es.n_trace), atol=1e-10)


def test_tip_edges_carry_one_extra_function(fracture4, frac_space):
    dims = {build_edge_space(fracture4, e, 2, True, frac_space).n_z for e in tip_edges(fracture4)}
    # crack faces carry psi = 0 and drop it; the other tip edges keep it
    assert dims == {0, 1}


def test_far_edge_has_no_complement():
    # straight edge at distance 10 from the tip: psi is numerically polynomial for k = 3
    v = np.array([[10.0, 0.0], [10.1, 0.0], [10.1, 0.1], [10.0, 0.1]])
    mesh = Mesh(v, [[0, 1, 2, 3]])
    sp = EnrichmentSpace((CornerSingularity(0.5, 0.0, np.pi),))
    for e in range(4):
        assert build_edge_space(mesh, e, 3, True, sp).n_z == 0


def test_rank_filter_is_scale_invariant(fracture4):
    big = EnrichmentSpace((FunctionField(lambda p: 1e6 * fracture_singularity().values(p)[0],
                                         lambda p: 1e6 * fracture_singularity().gradients(p)[0],
                                         lambda p: np.zeros(len(p))),))
    for e in range(fracture4.n_edges):
        a = build_edge_space(fracture4, e, 2, True, fracture_singularity()).n_z
        b = build_edge_space(fracture4, e, 2, True, big).n_z
        assert a == b


def test_trace_splitting(fracture4, frac_space, rng):
    # any w in P_k(E) + psi|E is reproduced by its Legendre and complement coefficients
    e = [e for e in tip_edges(fracture4) if build_edge_space(fracture4, e, 2, True, frac_space).n_z][0]
    es = build_edge_space(fracture4, e, 2, True, frac_space)
    c = rng.standard_normal(es.k + 2)
    psi = frac_space.values(es.rule.points, es.ref)[0]
    w = c[:-1] @ legendre_values(es.k, es.rule.t, es.length) + c[-1] * psi
    coef = (es.trace_values * es.rule.weights) @ w
    np.testing.assert_allclose(coef @ es.trace_values, w, atol=1e-10)


@pytest.mark.parametrize("k, dim", [(1, 1), (2, 1), (3, 3), (4, 6)])
def test_moment_space_dimension(fracture4, frac_space, k, dim):
    ms = build_element_moment_space(fracture4, 5, k, True, frac_space)
    assert ms.dim == dim


def test_moment_space_with_nonharmonic_field(fracture4):
    field = FunctionField(lambda p: p[:, 0] ** 2 / 2 + p[:, 0] ** 3 / 6,
                          lambda p: np.column_stack([p[:, 0] + p[:, 0] ** 2 / 2, 0 * p[:, 0]]),
                          lambda p: 1 + p[:, 0])
    ms = build_element_moment_space(fracture4, 5, 1, True, EnrichmentSpace((field,)))
    assert ms.dim == 2


def test_orthonormalise_drops_dependent_rows():
    x = np.linspace(0, 1, 7)
    w = np.full(7, 1 / 7)
    vals = np.vstack([np.ones(7), x, 2 * x + 3, x**2])
    coeffs, kept, basis = orthonormalise(vals, w)
    assert kept == [0, 1, 3]
    np.testing.assert_allclose((basis * w) @ basis.T, np.eye(3), atol=1e-13)
    np.testing.assert_allclose(coeffs @ vals, basis, atol=1e-12)


def test_monomial_derivatives():
    mono = Monomials(3, np.array([0.2, -0.1]), 0.5)
    p = np.array([[0.3, 0.4], [-0.2, 0.1]])
    e = 1e-6
    fd = (mono.values(p + [e, 0]) - mono.values(p - [e, 0])) / (2 * e)
    np.testing.assert_allclose(mono.gradients(p)[..., 0], fd, atol=1e-8)
    lap = sum(mono.values(p + d) for d in ([1e-3, 0], [-1e-3, 0], [0, 1e-3], [0, -1e-3])) - 4 * mono.values(p)
    np.testing.assert_allclose(mono.laplacians(p), lap / 1e-6, atol=1e-5)


def test_layout_offsets():
    lay = DofLayout.from_dims(4, [0, 2, 1], [1, 3])
    assert lay.size == 4 + 3 + 4
    np.testing.assert_array_equal(lay.edge_dofs(1), [4, 5])
    np.testing.assert_array_equal(lay.element_moment_dofs(1), [8, 9, 10])
    assert lay.moment_mask.sum() == 4


@pytest.mark.parametrize("mode", ["none", "local", "global"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_dof_count_matches_dimension(fracture4, frac_space, disc_factory, mode, k):
    disc = disc_factory(fracture4, k, frac_space, mode, 0.15)
    for el in range(fracture4.n_elements):
        loc = disc.locals[el]
        expected = len(fracture4.elements[el]) + sum(disc.edge_spaces[g].n_dofs
                                                     for g in fracture4.element_edges[el]) + loc.n3
        assert loc.n_local == expected == len(disc.element_dofs[el])


def test_constant_dofs(fracture4, disc_factory):
    disc = disc_factory(fracture4, 3)
    d = evaluate_dofs(disc, lambda p, ref: np.ones(len(p)))
    assert np.all(d[: fracture4.n_vertices] == 1.0)
    for e in range(fracture4.n_edges):
        edge = d[disc.layout.edge_dofs(e)]
        assert edge[0] == pytest.approx(np.sqrt(fracture4.edge_lengths[e]))
        assert edge[1] == pytest.approx(0.0, abs=1e-14)
    for el in range(fracture4.n_elements):
        assert d[disc.layout.element_moment_dofs(el)][0] == pytest.approx(np.sqrt(fracture4.areas[el]))


def test_local_and_global_dofs_agree(fracture4, frac_space, disc_factory):
    disc = disc_factory(fracture4, 2, frac_space, "local", 0.15)
    f = lambda p, ref: np.cos(np.atleast_2d(p)[:, 0]) + frac_space.values(p, ref)[0]
    d = evaluate_dofs(disc, f)
    for el in range(fracture4.n_elements):
        if fracture4.edge_on_boundary[fracture4.element_edges[el]].any():
            continue  # crack faces depend on the side reference
        np.testing.assert_allclose(evaluate_local_dofs(disc, el, f), d[disc.element_dofs[el]], atol=1e-13)


def test_dof_evaluation_fails_at_singular_vertex(fracture4, disc_factory):
    disc = disc_factory(fracture4, 1)
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        evaluate_dofs(disc, lambda p, ref: 1.0 / np.hypot(*np.atleast_2d(p).T))
