"""All local spaces of a mesh, the global DOF layout, and interpolation."""
from __future__ import annotations

import numpy as np

from .enrichment import EnrichmentPlan, is_enriched
from .projector import build_local_element
from .quadrature import DEFAULT_LEVELS
from .spaces import TAU_EDGE, TAU_RANK, DofLayout, build_edge_space


def _shape_key(mesh, el, k):
    coords = mesh.element_coords(el) - mesh.centroids[el]
    scale = mesh.diameters[el]
    return (k, len(coords), tuple(np.round(coords.ravel() / scale, 11)), round(float(scale), 13),
            tuple(mesh.element_edge_signs[el]))


class Discretization:
    """Spaces of degree ``k`` on ``mesh``.

    An element is enriched according to ``plan``; an edge carries the
    enrichment iff one of its elements does.  Elements touching no enrichment
    share :class:`~xvem.projector.LocalElement` objects by congruence class.
    """

    def __init__(self, mesh, k, space=None, plan=None, levels=DEFAULT_LEVELS, tau=TAU_RANK, tau_edge=TAU_EDGE):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.mesh, self.k, self.space = mesh, int(k), space
        self.plan = plan if plan is not None else EnrichmentPlan("none", None)
        self.levels, self.tau, self.tau_edge = levels, tau, tau_edge
        nP = mesh.n_elements
        self.element_enriched = np.array(
            [is_enriched(mesh.element_coords(el), self.plan, space) for el in range(nP)], dtype=bool)
        adj = mesh.edge_elements
        self.edge_enriched = np.zeros(mesh.n_edges, dtype=bool)
        for col in range(2):
            has = adj[:, col] >= 0
            self.edge_enriched[has] |= self.element_enriched[adj[has, col]]
        self.edge_spaces = [
            build_edge_space(mesh, e, self.k, bool(self.edge_enriched[e]), space, levels=levels, tau=tau_edge)
            for e in range(mesh.n_edges)
        ]
        self.locals = [None] * nP
        cache, self.groups = {}, {}
        for el in range(nP):
            plain = not self.element_enriched[el] and not any(
                self.edge_spaces[g].n_z for g in mesh.element_edges[el])
            if plain:
                key = _shape_key(mesh, el, self.k)
                if key not in cache:
                    cache[key] = build_local_element(mesh, el, self.k, self.edge_spaces, None, False, levels, tau)
                self.locals[el] = cache[key]
                self.groups.setdefault(key, []).append(el)
            else:
                self.locals[el] = build_local_element(mesh, el, self.k, self.edge_spaces, space,
                                                      bool(self.element_enriched[el]), levels, tau)
                self.groups[("single", el)] = [el]
        self.layout = DofLayout.from_dims(mesh.n_vertices, [es.n_dofs for es in self.edge_spaces],
                                          [loc.n3 for loc in self.locals])
        self.element_dofs = [self._element_dofs(el) for el in range(nP)]
        owner = np.full(mesh.n_vertices, -1, dtype=np.int64)
        for el in range(nP - 1, -1, -1):
            owner[mesh.elements[el]] = el
        self.vertex_ref = mesh.centroids[owner]

    def _element_dofs(self, el):
        lay = self.layout
        parts = [self.mesh.elements[el]]
        parts += [lay.edge_dofs(g) for g in self.mesh.element_edges[el]]
        parts.append(lay.element_moment_dofs(el))
        return np.concatenate(parts).astype(np.int64)

    @property
    def n_dofs(self):
        return self.layout.size

    @property
    def n_cached_shapes(self):
        return sum(1 for key in self.groups if key[0] != "single")

    def element_points(self, el):
        return self.locals[el].points_at(self.mesh.centroids[el])


def evaluate_dofs(disc, func):
    """Interpolate ``func`` onto the DOFs of ``disc``.

    ``func(points, ref)`` must return values at ``(n, 2)`` points; ``ref``
    holds, per point, the centroid of an owning element and is only used to
    pick the side of a branch cut.
    """
    mesh, lay = disc.mesh, disc.layout
    out = np.empty(lay.size)
    vals = np.asarray(func(mesh.vertices, disc.vertex_ref), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function is not finite at a mesh vertex")
    out[: mesh.n_vertices] = vals

    edge_ref = mesh.centroids[mesh.edge_elements[:, 0]]
    pts = np.concatenate([es.rule.points for es in disc.edge_spaces])
    counts = [len(es.rule.weights) for es in disc.edge_spaces]
    refs = np.repeat(edge_ref, counts, axis=0)
    fv = np.split(np.asarray(func(pts, refs), dtype=float), np.cumsum(counts)[:-1])
    for e, es in enumerate(disc.edge_spaces):
        if es.n_dofs:
            out[lay.edge_offsets[e] : lay.edge_offsets[e + 1]] = es.dof_values @ (es.rule.weights * fv[e])

    counts = [len(disc.locals[el].weights) for el in range(mesh.n_elements)]
    pts = np.concatenate([disc.element_points(el) for el in range(mesh.n_elements)])
    refs = np.repeat(mesh.centroids, counts, axis=0)
    fv = np.split(np.asarray(func(pts, refs), dtype=float), np.cumsum(counts)[:-1])
    for el, loc in enumerate(disc.locals):
        out[lay.element_offsets[el] : lay.element_offsets[el + 1]] = loc.moments.values @ (loc.weights * fv[el])
    return out


def evaluate_local_dofs(disc, el, func):
    """DOFs of ``func`` on element ``el`` only, in local order."""
    mesh = disc.mesh
    loc, xc = disc.locals[el], mesh.centroids[el]
    verts = mesh.element_coords(el)
    parts = [np.asarray(func(verts, np.tile(xc, (len(verts), 1))), dtype=float)]
    for g in mesh.element_edges[el]:
        es = disc.edge_spaces[g]
        if es.n_dofs:
            pts = es.rule.points
            fv = np.asarray(func(pts, np.tile(xc, (len(pts), 1))), dtype=float)
            parts.append(es.dof_values @ (es.rule.weights * fv))
    pts = loc.points_at(xc)
    parts.append(loc.moments.values @ (loc.weights * np.asarray(func(pts, np.tile(xc, (len(pts), 1))), float)))
    return np.concatenate(parts)
