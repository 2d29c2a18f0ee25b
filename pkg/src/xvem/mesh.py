"""Polygonal meshes: data model, generators for the benchmark domains, text I/O
and quality checks.

A slit (crack) is represented topologically: vertices lying on the open slit
are duplicated into an upper and a lower copy sharing the same coordinates,
and every slit edge appears twice, once per side.  The tip vertex is shared.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree


class MeshError(ValueError):
    """Raised when a mesh violates one of its structural invariants."""


def element_geometry(coords):
    """Return ``(area, centroid, diameter)`` of a polygon given by its
    counterclockwise vertex coordinates."""
    coords = np.asarray(coords, dtype=float)
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-300:
        raise MeshError("degenerate polygon with zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    diff = coords[:, None, :] - coords[None, :, :]
    diameter = np.sqrt((diff**2).sum(-1)).max()
    return area, np.array([cx, cy]), diameter


@dataclass(frozen=True)
class QualityReport:
    rho: np.ndarray  # star-shapedness radius / diameter, per element
    min_edge_ratio: np.ndarray  # shortest edge / diameter, per element
    kernel_points: np.ndarray  # centre of the largest ball in each element's kernel

    @property
    def min_rho(self):
        return float(self.rho.min())


@dataclass(eq=False)
class Mesh:
    vertices: np.ndarray  # (nV, 2)
    elements: list  # counterclockwise vertex-id cycles
    edges: np.ndarray = None  # (nE, 2) vertex ids
    name: str = ""
    # derived
    element_edges: list = field(default=None, repr=False)
    element_edge_signs: list = field(default=None, repr=False)
    edge_elements: np.ndarray = field(default=None, repr=False)
    areas: np.ndarray = field(default=None, repr=False)
    centroids: np.ndarray = field(default=None, repr=False)
    diameters: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.elements = [np.asarray(e, dtype=np.int64) for e in self.elements]
        self._build_topology()
        geo = [element_geometry(self.vertices[e]) for e in self.elements]
        self.areas = np.array([g[0] for g in geo])
        self.centroids = np.array([g[1] for g in geo]).reshape(-1, 2)
        self.diameters = np.array([g[2] for g in geo])
        self.vertices.setflags(write=False)

    def _build_topology(self):
        lookup = {}
        if self.edges is not None:
            self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
            for i, (a, b) in enumerate(self.edges):
                key = (min(a, b), max(a, b))
                if key in lookup:
                    raise MeshError(f"edge {i} duplicates edge {lookup[key]}")
                lookup[key] = i
            edges = [tuple(e) for e in self.edges]
        else:
            edges = []
        adjacency = [[] for _ in edges]
        self.element_edges, self.element_edge_signs = [], []
        for el, cyc in enumerate(self.elements):
            ids, signs = [], []
            for a, b in zip(cyc, np.roll(cyc, -1)):
                key = (min(a, b), max(a, b))
                if key not in lookup:
                    if self.edges is not None:
                        raise MeshError(f"element {el} uses undeclared edge ({a}, {b})")
                    lookup[key] = len(edges)
                    edges.append((a, b))
                    adjacency.append([])
                eid = lookup[key]
                ids.append(eid)
                signs.append(1 if edges[eid][0] == a else -1)
                adjacency[eid].append(el)
            self.element_edges.append(np.array(ids, dtype=np.int64))
            self.element_edge_signs.append(np.array(signs, dtype=np.int64))
        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_elements = np.full((len(edges), 2), -1, dtype=np.int64)
        for eid, adj in enumerate(adjacency):
            if len(adj) == 0 or len(adj) > 2:
                raise MeshError(f"edge {eid} has {len(adj)} adjacent elements")
            self.edge_elements[eid, : len(adj)] = adj

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def h(self):
        return float(self.diameters.max())

    # -- entities ----------------------------------------------------------
    @property
    def edge_on_boundary(self):
        return self.edge_elements[:, 1] < 0

    @property
    def vertex_on_boundary(self):
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[self.edges[self.edge_on_boundary].ravel()] = True
        return flags

    @property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def element_coords(self, el):
        return self.vertices[self.elements[el]]

    def outward_normals(self, el):
        """Unit outward normals of the edges of element ``el`` in cycle order."""
        xy = self.element_coords(el)
        d = np.roll(xy, -1, axis=0) - xy
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.hypot(n[:, 0], n[:, 1])[:, None]

    def summary(self):
        return dict(
            MeshSize=self.h,
            NbCells=self.n_elements,
            NbEdges=self.n_edges,
            NbVertices=self.n_vertices,
        )


# ---------------------------------------------------------------------------
# quality


def _kernel_ball(coords):
    """Largest ball inside the kernel (intersection of inner half-planes)."""
    d = np.roll(coords, -1, axis=0) - coords
    lengths = np.hypot(d[:, 0], d[:, 1])
    n = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    # n.x + r <= n.a  for every edge; maximise r
    a_ub = np.column_stack([n, np.ones(len(n))])
    b_ub = (n * coords).sum(1)
    res = linprog([0, 0, -1], A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * 2 + [(0, None)])
    if res.status != 0:
        return np.nan, coords.mean(0)
    return res.x[2], res.x[:2]


def kernel_point(coords):
    """A point with respect to which the polygon is star-shaped."""
    coords = np.asarray(coords, dtype=float)
    c = element_geometry(coords)[1]
    if in_kernel(coords, c, strict=True):
        return c
    r, x = _kernel_ball(coords)
    if not r > 0:
        raise MeshError("polygon is not star-shaped")
    return x


def in_kernel(coords, point, strict=False, tol=1e-12):
    d = np.roll(coords, -1, axis=0) - coords
    side = d[:, 0] * (point[1] - coords[:, 1]) - d[:, 1] * (point[0] - coords[:, 0])
    scale = np.hypot(d[:, 0], d[:, 1]).max()
    if strict:
        return bool(np.all(side > tol * scale**2))
    return bool(np.all(side >= -tol * scale**2))


def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return orient(p1, p2, q1) * orient(p1, p2, q2) < 0 and orient(q1, q2, p1) * orient(q1, q2, p2) < 0


def _is_simple(coords):
    m = len(coords)
    if m > 64:
        return True  # skip the quadratic check on huge polygons
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_intersect(coords[i], coords[(i + 1) % m], coords[j], coords[(j + 1) % m]):
                return False
    return True


def validate_mesh(mesh, area=None):
    """Check the structural invariants of ``mesh`` and estimate its regularity.

    Raises :class:`MeshError` naming the first offending entity.  If ``area``
    is given, the element areas must sum to it.
    """
    for el, cyc in enumerate(mesh.elements):
        xy = mesh.vertices[cyc]
        signed = 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
        if signed <= 0:
            raise MeshError(f"element {el} is not counterclockwise (signed area {signed:.3e})")
        if not _is_simple(xy):
            raise MeshError(f"element {el} is self-intersecting")
        if len(set(cyc.tolist())) != len(cyc):
            raise MeshError(f"element {el} repeats a vertex")
    lengths = mesh.edge_lengths
    if np.any(lengths <= 0):
        raise MeshError(f"edge {int(np.argmin(lengths))} has zero length")
    for eid, (a, b) in enumerate(mesh.edge_elements):
        for el in (a, b):
            if el >= 0 and eid not in mesh.element_edges[el]:
                raise MeshError(f"edge {eid} lists element {el} which does not list it")
    if area is not None and abs(mesh.areas.sum() - area) > 1e-10 * max(1.0, area):
        raise MeshError(f"element areas sum to {mesh.areas.sum():.15g}, expected {area}")

    rho = np.empty(mesh.n_elements)
    ratio = np.empty(mesh.n_elements)
    kernels = np.empty((mesh.n_elements, 2))
    for el, cyc in enumerate(mesh.elements):
        xy = mesh.vertices[cyc]
        r, x = _kernel_ball(xy)
        if not r > 0:
            raise MeshError(f"element {el} is not star-shaped with respect to a ball")
        rho[el] = min(r / mesh.diameters[el], 1.0)
        kernels[el] = x
        ratio[el] = lengths[mesh.element_edges[el]].min() / mesh.diameters[el]
    return QualityReport(rho=rho, min_edge_ratio=ratio, kernel_points=kernels)


# ---------------------------------------------------------------------------
# generators


def _check_even(n):
    if n < 2 or n % 2:
        raise MeshError(f"number of subdivisions must be even and >= 2, got {n}")


def build_cartesian_fractured_mesh(n):
    """Uniform ``n x n`` mesh of (-1, 1)^2 slit along {y = 0, x > 0}."""
    _check_even(n)
    xs = np.linspace(-1.0, 1.0, n + 1)
    grid = np.array([[x, y] for y in xs for x in xs])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[j, i]: row j (y), column i (x)
    mid = n // 2
    lower = idx.copy()
    extra = []
    for i in range(mid + 1, n + 1):
        lower[mid, i] = len(grid) + len(extra)
        extra.append(grid[idx[mid, i]])
    vertices = np.vstack([grid, np.array(extra)]) if extra else grid
    elements = []
    for j in range(n):
        # the top row of the cells just below the slit uses the lower copies
        top = lower if j + 1 == mid else idx
        for i in range(n):
            elements.append([idx[j, i], idx[j, i + 1], top[j + 1, i + 1], top[j + 1, i]])
    return Mesh(vertices, elements, name=f"fracture-cartesian-{n}")


def build_cartesian_lshape_mesh(n, removed="br"):
    """Uniform Cartesian mesh of (-1, 1)^2 minus the quadrant ``removed``
    (``"br"``: [0,1)x(-1,0], ``"tr"``: [0,1)^2)."""
    _check_even(n)
    xs = np.linspace(-1.0, 1.0, n + 1)
    mid = n // 2
    keep = []
    for j in range(n):
        for i in range(n):
            right = i >= mid
            upper = j >= mid
            if right and ((removed == "br" and not upper) or (removed == "tr" and upper)):
                continue
            keep.append((i, j))
    used = {}
    vertices = []

    def vid(i, j):
        if (i, j) not in used:
            used[(i, j)] = len(vertices)
            vertices.append((xs[i], xs[j]))
        return used[(i, j)]

    elements = [[vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)] for i, j in keep]
    return Mesh(np.array(vertices), elements, name=f"lshape-{removed}-cartesian-{n}")


def _lshape_polygon(removed):
    if removed == "tr":
        return [(-1, -1), (1, -1), (1, 0), (0, 0), (0, 1), (-1, 1)]
    return [(-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)]


def _conform(polys, tol=1e-10):
    """Merge coincident vertices and insert hanging vertices into edges."""
    pts = np.vstack(polys)
    keys = np.round(pts / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    vertices = pts[first]
    inverse = inverse.ravel()
    cycles, start = [], 0
    for p in polys:
        cyc = inverse[start : start + len(p)].tolist()
        start += len(p)
        cycles.append([v for i, v in enumerate(cyc) if v != cyc[i - 1]])
    tree = cKDTree(vertices)
    out = []
    for cyc in cycles:
        new = []
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            new.append(a)
            pa, pb = vertices[a], vertices[b]
            seg = pb - pa
            length = np.hypot(*seg)
            cand = tree.query_ball_point(0.5 * (pa + pb), 0.5 * length + tol)
            inner = []
            for c in cand:
                if c in (a, b):
                    continue
                w = vertices[c] - pa
                t = (w @ seg) / length**2
                dist = abs(seg[0] * w[1] - seg[1] * w[0]) / length
                if tol < t < 1 - tol and dist < tol * 10:
                    inner.append((t, c))
            new.extend(c for _, c in sorted(inner))
        out.append(new)
    return vertices, out


def build_hexagonal_lshape_mesh(level, removed="tr", sliver=1e-12):
    """Hexagonal lattice clipped to the L-shaped domain.

    The circumradius at ``level`` is ``2 / (3 * 2**level)``, so the horizontal
    boundary lines pass through hexagon centres.  Clipped cells smaller than
    ``sliver`` times the domain area are merged into the neighbour they share
    the longest edge with.
    """
    from shapely.geometry import Polygon
    from shapely.geometry.polygon import orient

    if level < 1:
        raise MeshError("level must be >= 1")
    a = 2.0 / (3.0 * 2**level)
    w = np.sqrt(3.0) * a
    domain = Polygon(_lshape_polygon(removed))
    angles = np.pi / 6 + np.pi / 3 * np.arange(6)
    unit = np.column_stack([np.cos(angles), np.sin(angles)]) * a
    rows = int(np.ceil(1.0 / (1.5 * a))) + 2
    cols = int(np.ceil(1.0 / w)) + 2
    cells = []
    for j in range(-rows, rows + 1):
        shift = 0.5 * w if j % 2 else 0.0
        for i in range(-cols, cols + 1):
            centre = np.array([i * w + shift, 1.5 * a * j])
            hexagon = Polygon(centre + unit)
            piece = hexagon.intersection(domain)
            if piece.is_empty or piece.area < 1e-14:
                continue
            parts = getattr(piece, "geoms", [piece])
            for part in parts:
                if part.geom_type == "Polygon" and part.area > 1e-14:
                    cells.append(part)
    cells = _merge_slivers(cells, sliver * domain.area)
    polys = []
    for c in cells:
        c = orient(c.simplify(0.0), 1.0)
        polys.append(np.array(c.exterior.coords)[:-1])
    vertices, cycles = _conform(polys)
    return Mesh(vertices, cycles, name=f"lshape-{removed}-hexagonal-{level}")


def _merge_slivers(cells, min_area):
    cells = list(cells)
    while True:
        small = [i for i, c in enumerate(cells) if c.area < min_area]
        if not small:
            return cells
        i = small[0]
        best, best_len = None, 0.0
        for j, c in enumerate(cells):
            if j == i:
                continue
            shared = cells[i].boundary.intersection(c.boundary).length
            if shared > best_len:
                best, best_len = j, shared
        if best is None:
            return cells
        merged = cells[best].union(cells[i])
        cells[best] = merged
        del cells[i]


# ---------------------------------------------------------------------------
# text format


def write_mesh(mesh, path):
    lines = [f"vertices {mesh.n_vertices}"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.vertices)]
    lines.append(f"edges {mesh.n_edges}")
    lines += [f"{i} {a} {b}" for i, (a, b) in enumerate(mesh.edges)]
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{i} " + " ".join(map(str, cyc)) for i, cyc in enumerate(mesh.elements)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    """Read the line-oriented mesh format written by :func:`write_mesh`.

    Element cycles given clockwise are reoriented.
    """
    tokens = [ln.split() for ln in Path(path).read_text().splitlines()]
    tokens = [t for t in tokens if t and not t[0].startswith("#")]
    pos = 0

    def section(name):
        nonlocal pos
        head = tokens[pos]
        if head[0] != name or len(head) != 2:
            raise MeshError(f"expected '{name} N' header, got {' '.join(head)}")
        count = int(head[1])
        body = tokens[pos + 1 : pos + 1 + count]
        if len(body) != count:
            raise MeshError(f"section '{name}' is truncated")
        pos += 1 + count
        for expect, row in enumerate(body):
            if int(row[0]) != expect:
                raise MeshError(f"{name} ids must be dense, got {row[0]} at position {expect}")
        return body

    verts = np.array([[float(r[1]), float(r[2])] for r in section("vertices")])
    edges = np.array([[int(r[1]), int(r[2])] for r in section("edges")], dtype=np.int64)
    elements = []
    for r in section("elements"):
        cyc = [int(v) for v in r[1:]]
        xy = verts[cyc]
        signed = np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
        elements.append(cyc if signed > 0 else cyc[::-1])
    return Mesh(verts, elements, edges=edges, name=Path(path).stem)


DOMAIN_AREAS = {"fracture": 4.0, "lshape-tr": 3.0, "lshape-br": 3.0}
