"""Boundary-trace reconstruction and the extended elliptic projector.

Everything an element needs is gathered once in a :class:`LocalElement`:
quadrature, the extended polynomial basis, the moment space, the projector
matrix ``pi_star`` (local DOFs -> basis coefficients) and the local stiffness.
Elements without any enrichment are described in coordinates relative to
their centroid, so congruent elements can share one object.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import DEFAULT_LEVELS, polygon_rule
from .spaces import TAU_RANK, Monomials, build_moment_space, n_monomials, orthonormalise


class ProjectorError(RuntimeError):
    pass


@dataclass(eq=False)
class EdgeBlock:
    """Data of one element edge used by the projector and the stabilisation."""

    cols: np.ndarray  # local columns [start vertex, end vertex, D2...] (edge orientation)
    trace: np.ndarray  # T_E: those columns -> trace coefficients
    beta: np.ndarray  # trace basis at the edge rule, (n_trace, nq)
    weights: np.ndarray
    phi: np.ndarray  # projection basis at the edge rule, (N, nq)


@dataclass(eq=False)
class LocalElement:
    k: int
    h: float
    area: float
    n_vertices: int
    edge_dims: tuple
    fields: tuple  # indices of the enrichment fields kept in the projection basis
    points: np.ndarray  # element rule, relative to the centroid
    weights: np.ndarray
    moments: object  # ElementMomentSpace
    phi: np.ndarray  # (N, nq) basis values at the rule
    grad: np.ndarray  # (N, nq, 2)
    edges: list = field(repr=False)
    G: np.ndarray = None
    M: np.ndarray = None
    Q: np.ndarray = None  # (n3, N) moments of the basis functions
    B: np.ndarray = None
    pi_star: np.ndarray = None
    K: np.ndarray = None
    anchor: np.ndarray = None  # centroid of the element the rule was built on
    rule_points: np.ndarray = field(default=None, repr=False)  # the same rule in absolute coordinates

    @property
    def n_poly(self):
        return n_monomials(self.k)

    @property
    def n_basis(self):
        return self.n_poly + len(self.fields)

    @property
    def n3(self):
        return self.moments.dim

    @property
    def n_local(self):
        return self.n_vertices + sum(self.edge_dims) + self.n3

    @property
    def d3_cols(self):
        return np.arange(self.n_local - self.n3, self.n_local)

    def edge_cols(self, i):
        start = self.n_vertices + sum(self.edge_dims[:i])
        return np.arange(start, start + self.edge_dims[i])

    def points_at(self, centroid):
        """Quadrature points for an element with this shape centred at ``centroid``.

        The building element gets its original points back: shifting graded
        points near a singularity would round some of them onto it.
        """
        if np.array_equal(centroid, self.anchor):
            return self.rule_points
        return self.points + centroid

    def basis(self, points, centroid, space=None, gradients=False):
        """Projection basis (monomials then fields) at absolute ``points``."""
        mono = Monomials(self.k, centroid, self.h)
        if gradients:
            parts = [mono.gradients(points)]
            if self.fields:
                parts.append(space.gradients(points, centroid)[list(self.fields)])
        else:
            parts = [mono.values(points)]
            if self.fields:
                parts.append(space.values(points, centroid)[list(self.fields)])
        return np.concatenate(parts, axis=0)

    # -- local operators ---------------------------------------------------
    def stabilisation_parts(self):
        """Residual maps whose Gram sums give the stabilising form."""
        n3 = self.n3
        sel3 = np.zeros((n3, self.n_local))
        sel3[:, self.d3_cols] = np.eye(n3)
        r3 = sel3 - self.Q @ self.pi_star
        edge_res = []
        for blk in self.edges:
            sel = np.zeros((len(blk.cols), self.n_local))
            sel[np.arange(len(blk.cols)), blk.cols] = 1.0
            v = blk.beta.T @ (blk.trace @ sel) - blk.phi.T @ self.pi_star
            edge_res.append((v, blk.weights))
        return r3, edge_res

    def stabilisation(self):
        r3, edge_res = self.stabilisation_parts()
        S = r3.T @ r3 / self.h**2
        for v, w in edge_res:
            S += (v.T * w) @ v / self.h
        return S

    def consistency(self):
        return self.pi_star.T @ self.G @ self.pi_star


def _local_vertex_pair(i, sign, m):
    """Local vertex indices of local edge ``i`` in the global edge orientation."""
    a, b = i, (i + 1) % m
    return (a, b) if sign > 0 else (b, a)


def build_local_element(mesh, el, k, edge_spaces, space=None, enriched=False, levels=DEFAULT_LEVELS,
                        tau=TAU_RANK):
    """Assemble every local operator of element ``el``.

    ``edge_spaces`` is indexed by global edge id.  The returned object stores
    its quadrature relative to the element centroid.
    """
    coords = mesh.element_coords(el)
    xc, h, area = mesh.centroids[el], float(mesh.diameters[el]), float(mesh.areas[el])
    m = len(coords)
    use_fields = enriched and space is not None and len(space) > 0
    rule = polygon_rule(coords, 2 * k + 4, space.singular_point if use_fields else None, levels)
    w = rule.weights
    mono = Monomials(k, xc, h)
    vp, gp, lp = mono.values(rule.points), mono.gradients(rule.points), mono.laplacians(rule.points)
    npoly = len(vp)
    fields = ()
    nq = len(w)
    lap_all = np.zeros((0, nq))
    if use_fields:
        psi = space.values(rule.points, xc)
        lap_all = space.laplacians(rule.points, xc)
        _, kept, _ = orthonormalise(np.vstack([vp, psi]), w, tau, keep_first=npoly)
        fields = tuple(j - npoly for j in kept if j >= npoly)
    if fields:
        idx = list(fields)
        phi = np.vstack([vp, psi[idx]])
        grad = np.concatenate([gp, space.gradients(rule.points, xc)[idx]], axis=0)
        lap = np.vstack([lp, lap_all[idx]])
    else:
        phi, grad, lap = vp, gp, lp
    moments = build_moment_space(vp, lap_all, w, k, tau)

    edge_dims = tuple(edge_spaces[g].n_dofs for g in mesh.element_edges[el])
    loc = LocalElement(k, h, area, m, edge_dims, fields, rule.points - xc, w, moments, phi, grad, [],
                       anchor=xc.copy(), rule_points=rule.points)
    N, nl = loc.n_basis, loc.n_local

    B = np.zeros((N, nl))
    B[:, loc.d3_cols] = -(lap * w) @ moments.values.T
    normals = mesh.outward_normals(el)
    for i, (g, sign) in enumerate(zip(mesh.element_edges[el], mesh.element_edge_signs[el])):
        es = edge_spaces[g]
        va, vb = _local_vertex_pair(i, sign, m)
        cols = np.r_[va, vb, loc.edge_cols(i)].astype(np.int64)
        T = es.trace_matrix()
        pts = es.rule.points
        phi_e = loc.basis(pts, xc, space)
        flux = np.einsum("npd,d->np", loc.basis(pts, xc, space, gradients=True), normals[i])
        B[:, cols] += ((flux * es.rule.weights) @ es.trace_values.T) @ T
        loc.edges.append(EdgeBlock(cols, T, es.trace_values, es.rule.weights, phi_e))

    G = np.einsum("ipd,jpd,p->ij", grad, grad, w)
    loc.G, loc.M = G, (phi * w) @ phi.T
    loc.Q = (moments.values * w) @ phi.T
    Gt, Bt = G.copy(), B.copy()
    Gt[0] = phi @ w
    Bt[0] = 0.0
    Bt[0, loc.d3_cols] = moments.values @ w
    cond = np.linalg.cond(Gt)
    if not np.isfinite(cond) or cond > 1e16:
        raise ProjectorError(f"projector system of element {el} is singular (cond ~ {cond:.2e})")
    loc.B = B
    loc.pi_star = np.linalg.solve(Gt, Bt)
    K = loc.consistency() + loc.stabilisation()
    loc.K = 0.5 * (K + K.T)
    return loc


# ---------------------------------------------------------------------------
# DOF-level operations


@dataclass(eq=False)
class TraceFunction:
    """Per-edge trace coefficients in each edge's ``[L_0..L_k, z...]`` basis."""

    coefficients: list
    edge_ids: np.ndarray
    edge_spaces: list

    def values(self, i):
        """Trace of local edge ``i`` at its quadrature points."""
        return self.coefficients[i] @ self.edge_spaces[i].trace_values

    def endpoint_values(self, i):
        return self.coefficients[i] @ self.edge_spaces[i].trace_endpoints


def reconstruct_trace(mesh, el, local_dofs, local, edge_spaces):
    """Trace of the virtual function with local DOF vector ``local_dofs``."""
    local_dofs = np.asarray(local_dofs, dtype=float)
    if local_dofs.shape != (local.n_local,):
        raise ValueError(f"expected {local.n_local} local DOFs, got {local_dofs.shape}")
    coeffs = [blk.trace @ local_dofs[blk.cols] for blk in local.edges]
    ids = mesh.element_edges[el]
    return TraceFunction(coeffs, ids, [edge_spaces[g] for g in ids])


@dataclass(eq=False)
class Projection:
    """Coefficients of the projection on the element's extended basis."""

    coefficients: np.ndarray
    local: LocalElement
    centroid: np.ndarray
    space: object = None

    def __len__(self):
        return len(self.coefficients)


def elliptic_projector(local, local_dofs, centroid, space=None):
    return Projection(local.pi_star @ np.asarray(local_dofs, float), local, np.asarray(centroid), space)


def project_evaluate(projection, points, gradients=False):
    """Values (or gradients, shape ``(n, 2)``) of a projection at points."""
    basis = projection.local.basis(np.atleast_2d(points), projection.centroid, projection.space, gradients)
    return np.tensordot(projection.coefficients, basis, axes=(0, 0))
