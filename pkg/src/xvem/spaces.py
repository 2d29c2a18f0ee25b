"""Local polynomial and extended spaces, and the degrees of freedom.

Edge spaces use Legendre polynomials in the edge parameter, orthonormal in
L2(E), plus the part of the enrichment traces orthogonal to them.  Element
moment spaces are orthonormalised scaled monomials plus the Laplacians of the
enrichment fields.  All orthonormalisation is done in the discrete inner
product of the quadrature rule that later integrates against these bases, so
degrees of freedom round-trip exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .quadrature import DEFAULT_LEVELS, edge_rule, polygon_rule

TAU_RANK = 1e-8
# Edge complements are orthonormalised, so keeping small ones costs no
# conditioning, while dropping one leaves traces of enriched functions outside
# the edge space by about this much.
TAU_EDGE = 1e-10


@lru_cache(maxsize=None)
def monomial_exponents(degree):
    """Exponents (a, b) of x^a y^b with a + b <= degree, by increasing degree."""
    if degree < 0:
        return ()
    return tuple((d - j, j) for d in range(degree + 1) for j in range(d + 1))


def n_monomials(degree):
    return (degree + 1) * (degree + 2) // 2 if degree >= 0 else 0


class Monomials:
    """Scaled monomials ((x - c)/h)^a ((y - c)/h)^b up to ``degree``."""

    def __init__(self, degree, centre, h):
        self.degree = degree
        self.centre = np.asarray(centre, dtype=float)
        self.h = float(h)
        self.exponents = np.array(monomial_exponents(degree), dtype=int).reshape(-1, 2)

    def __len__(self):
        return len(self.exponents)

    def _powers(self, points):
        z = (np.atleast_2d(points) - self.centre) / self.h
        d = self.degree
        px = z[:, 0][None, :] ** np.arange(d + 1)[:, None]
        py = z[:, 1][None, :] ** np.arange(d + 1)[:, None]
        return px, py

    def values(self, points):
        px, py = self._powers(points)
        a, b = self.exponents.T
        return px[a] * py[b]

    def gradients(self, points):
        px, py = self._powers(points)
        a, b = self.exponents.T
        am, bm = np.maximum(a - 1, 0), np.maximum(b - 1, 0)
        gx = a[:, None] * px[am] * py[b] / self.h
        gy = b[:, None] * px[a] * py[bm] / self.h
        return np.stack([gx, gy], axis=-1)

    def laplacians(self, points):
        px, py = self._powers(points)
        a, b = self.exponents.T
        a2, b2 = np.maximum(a - 2, 0), np.maximum(b - 2, 0)
        return ((a * (a - 1))[:, None] * px[a2] * py[b] + (b * (b - 1))[:, None] * px[a] * py[b2]) / self.h**2


def orthonormalise(values, weights, tau=TAU_RANK, keep_first=0):
    """Modified Gram-Schmidt with one reorthogonalisation pass.

    ``values`` holds candidate functions (rows) sampled at quadrature points.
    Candidates whose residual falls below ``tau`` times their own norm are
    dropped, except the first ``keep_first`` ones.  Returns
    ``(coeffs, kept, basis)``: ``coeffs @ values`` is orthonormal, ``kept``
    lists retained indices and ``basis`` holds the orthonormal samples.
    """
    n = len(values)
    basis = np.zeros((0, values.shape[1]))
    coeffs = np.zeros((0, n))
    kept = []
    for i in range(n):
        v = values[i].copy()
        c = np.zeros(n)
        c[i] = 1.0
        norm0 = np.sqrt(np.sum(weights * v * v))
        for _ in range(2):
            proj = basis @ (weights * v)
            v -= proj @ basis
            c -= proj @ coeffs
        norm = np.sqrt(np.sum(weights * v * v))
        if i >= keep_first and (norm0 == 0.0 or norm <= tau * norm0):
            continue
        basis = np.vstack([basis, v / norm])
        coeffs = np.vstack([coeffs, c / norm])
        kept.append(i)
    return coeffs, kept, basis


def legendre_values(k, t, length):
    """L2(E)-orthonormal Legendre polynomials L_0..L_k at parameters ``t``."""
    t = np.asarray(t, dtype=float)
    vals = np.array([npleg.legval(t, np.eye(k + 1)[j]) for j in range(k + 1)])
    scale = np.sqrt((2 * np.arange(k + 1) + 1) / length)
    return vals * scale[:, None]


@dataclass(eq=False)
class EdgeSpace:
    """Bases of P_k(E) (+) P_E and of its D2 subspace on one edge.

    The trace basis is ``[L_0..L_k, z_1..z_nz]``; the D2 basis is
    ``[L_0..L_{k-2}, z_1..z_nz]``.  Both are evaluated at the edge rule.
    """

    edge: int
    k: int
    a: np.ndarray
    b: np.ndarray
    length: float
    rule: object
    ref: np.ndarray | None
    z_coeffs: np.ndarray  # (nz, n_fields + k + 1) on [psi..., L_0..L_k]
    trace_values: np.ndarray  # (k + 1 + nz, nq)
    trace_endpoints: np.ndarray  # (k + 1 + nz, 2) values at a and b
    enriched: bool

    @property
    def n_z(self):
        return len(self.z_coeffs)

    @property
    def n_trace(self):
        return self.k + 1 + self.n_z

    @property
    def n_dofs(self):
        return max(self.k - 1, 0) + self.n_z

    @property
    def dof_rows(self):
        """Rows of the trace basis spanning the D2 space."""
        return np.r_[np.arange(max(self.k - 1, 0)), self.k + 1 + np.arange(self.n_z)]

    @property
    def dof_values(self):
        return self.trace_values[self.dof_rows]

    def trace_matrix(self):
        """Map ``[v(a), v(b), D2...]`` to trace coefficients.

        Implements the constructive boundary reconstruction: the P_E part is
        read off the D2 data, the low Legendre modes are copied, and the two
        top modes are fixed by the endpoint values minus the P_E part.
        """
        cached = self.__dict__.get("_trace_matrix")
        if cached is not None:
            return cached
        k, nz, nd = self.k, self.n_z, self.n_dofs
        low = max(k - 1, 0)
        T = np.zeros((self.n_trace, 2 + nd))
        T[:low, 2 : 2 + low] = np.eye(low)
        T[k + 1 :, 2 + low :] = np.eye(nz)
        top = [k - 1, k] if k >= 1 else [k]
        ends = self.trace_endpoints  # (n_trace, 2)
        A = ends[top].T  # 2x2: rows endpoints, cols top modes
        rhs = np.zeros((2, 2 + nd))
        rhs[:, :2] = np.eye(2)
        rhs -= ends.T @ T  # subtract contributions of already-fixed modes
        T[top] = np.linalg.solve(A, rhs)
        self.__dict__["_trace_matrix"] = T
        return T


def build_edge_space(mesh, edge, k, enriched=False, space=None, ref=None, degree=None,
                     levels=DEFAULT_LEVELS, tau=TAU_EDGE):
    """Edge space on ``mesh.edges[edge]`` (oriented from its first vertex)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    a, b = mesh.vertices[mesh.edges[edge]]
    length = float(np.hypot(*(b - a)))
    if ref is None:
        ref = mesh.centroids[mesh.edge_elements[edge, 0]]
    use_fields = enriched and space is not None and len(space) > 0
    degree = 2 * k + 2 if degree is None else degree
    rule = edge_rule(a, b, degree, space.singular_point if use_fields else None, levels)
    leg = legendre_values(k, rule.t, length)
    leg_ends = legendre_values(k, np.array([-1.0, 1.0]), length)
    nf = len(space) if use_fields else 0
    z_coeffs = np.zeros((0, nf + k + 1))
    z_vals = np.zeros((0, len(rule.t)))
    z_ends = np.zeros((0, 2))
    if use_fields:
        psi = space.values(rule.points, ref)
        psi_ends = space.values(np.array([a, b]), ref)
        cand = np.vstack([leg, psi])
        coeffs, kept, ortho = orthonormalise(cand, rule.weights, tau, keep_first=k + 1)
        extra = [i for i, j in enumerate(kept) if j > k]
        if extra:
            c = coeffs[extra]  # columns ordered [L..., psi...]
            z_coeffs = np.hstack([c[:, k + 1 :], c[:, : k + 1]])
            z_vals = ortho[extra]
            z_ends = c @ np.vstack([leg_ends, psi_ends])
    trace_values = np.vstack([leg, z_vals])
    trace_ends = np.vstack([leg_ends, z_ends])
    return EdgeSpace(edge, k, a, b, length, rule, np.asarray(ref), z_coeffs, trace_values, trace_ends,
                     bool(use_fields))


@dataclass(eq=False)
class ElementMomentSpace:
    """Orthonormal basis of P_l(P) + Laplacians of the element's fields."""

    l: int
    coeffs: np.ndarray  # (dim, n_candidates) on [monomials of degree <= l, laplacians]
    values: np.ndarray  # (dim, nq) at the element rule
    n_fields: int

    @property
    def dim(self):
        return len(self.coeffs)


def moment_degree(k):
    return max(0, k - 2)


def build_moment_space(monomial_values, laplacian_values, weights, k, tau=TAU_RANK):
    l = moment_degree(k)
    nl = n_monomials(l)
    cand = np.vstack([monomial_values[:nl], laplacian_values])
    coeffs, _, ortho = orthonormalise(cand, weights, tau, keep_first=nl)
    return ElementMomentSpace(l, coeffs, ortho, len(laplacian_values))


def build_element_moment_space(mesh, el, k, enriched=False, space=None, levels=DEFAULT_LEVELS,
                               tau=TAU_RANK):
    """Moment space of element ``el`` (standalone; the solver builds the same
    object inside :func:`xvem.projector.build_local_element`)."""
    coords = mesh.element_coords(el)
    xc, h = mesh.centroids[el], mesh.diameters[el]
    use_fields = enriched and space is not None and len(space) > 0
    rule = polygon_rule(coords, 2 * k + 4, space.singular_point if use_fields else None, levels)
    mono = Monomials(moment_degree(k), xc, h).values(rule.points)
    lap = space.laplacians(rule.points, xc) if use_fields else np.zeros((0, len(rule.weights)))
    return build_moment_space(mono, lap, rule.weights, k, tau)


@dataclass(eq=False)
class DofLayout:
    """Global numbering: vertex values, then edge moments, then element moments."""

    n_vertices: int
    edge_offsets: np.ndarray  # (nE + 1,)
    element_offsets: np.ndarray  # (nP + 1,)

    @classmethod
    def from_dims(cls, n_vertices, edge_dims, element_dims):
        eo = n_vertices + np.concatenate([[0], np.cumsum(edge_dims)])
        po = eo[-1] + np.concatenate([[0], np.cumsum(element_dims)])
        return cls(n_vertices, eo.astype(np.int64), po.astype(np.int64))

    @property
    def size(self):
        return int(self.element_offsets[-1])

    def edge_dofs(self, e):
        return np.arange(self.edge_offsets[e], self.edge_offsets[e + 1])

    def element_moment_dofs(self, el):
        return np.arange(self.element_offsets[el], self.element_offsets[el + 1])

    @property
    def moment_mask(self):
        mask = np.zeros(self.size, dtype=bool)
        mask[self.element_offsets[0] :] = True
        return mask
