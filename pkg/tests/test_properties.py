import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from xvem.discretization import Discretization, evaluate_local_dofs
from xvem.enrichment import CornerSingularity, EnrichmentPlan, EnrichmentSpace
from xvem.mesh import Mesh
from xvem.postprocess import fit_rates
from xvem.problems import PolynomialSolution
from xvem.projector import elliptic_projector, project_evaluate
from xvem.spaces import orthonormalise


@st.composite
def convex_polygons(draw):
    m = draw(st.integers(3, 8))
    jitter = draw(st.lists(st.floats(-0.25, 0.25), min_size=m, max_size=m))
    angles = 2 * np.pi * (np.arange(m) + np.array(jitter)) / m + draw(st.floats(0, 2 * np.pi))
    scale = draw(st.floats(1e-2, 1e2))
    shift = np.array([draw(st.floats(-10, 10)), draw(st.floats(-10, 10))])
    return Mesh(scale * np.column_stack([np.cos(angles), np.sin(angles)]) + shift, [list(range(m))])


@given(convex_polygons(), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_local_element_consistency(mesh, k, seed):
    disc = Discretization(mesh, k)
    loc, xc = disc.locals[0], mesh.centroids[0]
    K = loc.K
    ev = np.linalg.eigvalsh(K)
    assert np.allclose(K, K.T, atol=1e-13 * ev[-1])
    assert ev[0] > -1e-10 * ev[-1] and ev[1] > 1e-10 * ev[-1]
    q = PolynomialSolution.random(k, np.random.default_rng(seed))
    proj = elliptic_projector(loc, evaluate_local_dofs(disc, 0, lambda p, r: q.value(p)), xc)
    pts = loc.points_at(xc)
    scale = np.abs(q.value(pts)).max() + 1
    assert np.abs(project_evaluate(proj, pts) - q.value(pts)).max() < 1e-8 * scale


@given(convex_polygons(), st.integers(1, 3))
def test_enriched_element_with_singular_vertex(mesh, k):
    # put the singular point on a vertex, cut along the outward ray from the centroid
    tip = mesh.vertices[0]
    out = tip - mesh.centroids[0]
    field = CornerSingularity(0.5, 0.0, np.arctan2(out[1], out[0]), origin=tip)
    sp = EnrichmentSpace((field,), tip)
    disc = Discretization(mesh, k, sp, EnrichmentPlan("global"))
    loc = disc.locals[0]
    assert loc.fields == (0,)
    ev = np.linalg.eigvalsh(loc.K)
    assert ev[0] > -1e-9 * ev[-1] and ev[1] > 1e-10 * ev[-1]
    v = evaluate_local_dofs(disc, 0, lambda p, r: sp.values(p, r)[0])
    assert abs(v @ loc.stabilisation() @ v) < 1e-10 * max(v @ loc.K @ v, 1e-300)


@given(st.floats(0.2, 5.0), st.floats(1e-3, 1e3), st.integers(3, 7))
def test_rate_fit_recovers_power_laws(p, c, n):
    h = 2.0 ** -np.arange(n)
    fit = fit_rates(h, c * h**p, dofs=h**-2)
    assert abs(fit.h_slope - p) < 1e-9 and abs(fit.dof_slope + p / 2) < 1e-9


@given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.floats(1e-6, 1e6))
def test_orthonormalise_is_orthonormal(rows, seed, scale):
    rng = np.random.default_rng(seed)
    vals = scale * rng.standard_normal((rows, 20))
    w = rng.uniform(0.1, 1.0, 20)
    coeffs, kept, basis = orthonormalise(vals, w)
    assert len(kept) == rows
    np.testing.assert_allclose((basis * w) @ basis.T, np.eye(rows), atol=1e-12)
    np.testing.assert_allclose(coeffs @ vals, basis, atol=1e-10)
