"""Quadrature on edges and polygons.

Polygon rules are built on a fan of triangles, each integrated by a collapsed
(Duffy) tensor Gauss rule.  When a singular point is supplied and lies close
to the element, the element is swept radially from that point instead, with
geometric grading toward it when it touches the element, so that integrands
behaving like ``r**beta`` times smooth functions converge quickly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import MeshError, in_kernel, kernel_point

# Power of the substitution t = s**GRADING_POWER used on the innermost graded
# layer; 6 turns every r**(m/2) and r**(m/3) into a polynomial in s.
GRADING_POWER = 6
DEFAULT_LEVELS = 14
NEAR_FACTOR = 3.0


@dataclass(frozen=True)
class EdgeRule:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    t: np.ndarray  # parameter in [-1, 1] from the first to the second endpoint


@dataclass(frozen=True)
class PolygonRule:
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        return np.asarray(values) @ self.weights


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def graded_unit_rule(n, levels, power=GRADING_POWER):
    """Rule on [0, 1] graded toward 0.

    ``levels`` layers [2**-(j+1), 2**-j] carry ``n`` Gauss points each; the
    innermost interval [0, 2**-levels] uses the substitution t = c * s**power.
    """
    x, w = gauss_legendre(n)
    s, ws = 0.5 * (x + 1), 0.5 * w
    nodes, weights = [], []
    for j in range(levels):
        lo, hi = 2.0 ** -(j + 1), 2.0**-j
        nodes.append(lo + (hi - lo) * s)
        weights.append((hi - lo) * ws)
    c = 2.0**-levels
    xi, wi = gauss_legendre(n + 3 * power // 2)
    si, wsi = 0.5 * (xi + 1), 0.5 * wi
    nodes.append(c * si**power)
    weights.append(c * power * si ** (power - 1) * wsi)
    t, wt = np.concatenate(nodes), np.concatenate(weights)
    t.setflags(write=False)
    wt.setflags(write=False)
    return t, wt


def gauss_edge(a, b, n_points):
    """Gauss-Legendre rule with ``n_points`` nodes on the segment [a, b]."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    x, w = gauss_legendre(n_points)
    length = np.hypot(*(b - a))
    pts = a + 0.5 * (x[:, None] + 1) * (b - a)
    return EdgeRule(pts, 0.5 * length * w, np.array(x))


def _separate(points, weights, apex, extra=None):
    """Drop nodes that rounded onto ``apex``.

    Graded nodes sit up to ~1e-20 from the singular point; unless it is the
    origin, some of them are not representable and collapse onto it, where the
    integrand may be infinite.  Their weights are negligible.
    """
    keep = np.hypot(*(points - apex).T) > 4 * np.finfo(float).eps * np.abs(apex).max()
    if keep.all():
        return (points, weights) if extra is None else (points, weights, extra)
    out = (points[keep], weights[keep])
    return out if extra is None else out + (extra[keep],)


def graded_edge(a, b, n_points, toward, levels=DEFAULT_LEVELS):
    """Edge rule graded geometrically toward endpoint ``toward`` (0 for a, 1 for b)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    s, ws = graded_unit_rule(n_points, levels)
    length = np.hypot(*(b - a))
    # measure from the graded end so tiny offsets survive rounding
    if toward == 0:
        pts, t = a + s[:, None] * (b - a), 2.0 * s - 1.0
    else:
        pts, t = b + s[:, None] * (a - b), 1.0 - 2.0 * s
    return EdgeRule(*_separate(pts, length * ws, a if toward == 0 else b, t))


# Gauss points per geometric layer; the layers see t**beta, which needs a few
# more points than the polynomial degree alone suggests.
LAYER_POINTS = 8


def edge_rule(a, b, degree, singular_point=None, levels=DEFAULT_LEVELS):
    """Rule on [a, b] exact for polynomials of ``degree``, adapted to a
    singular point at (or near) the edge."""
    n = degree // 2 + 1
    if singular_point is None:
        return gauss_edge(a, b, n)
    a, b, s = np.asarray(a, float), np.asarray(b, float), np.asarray(singular_point, float)
    length = np.hypot(*(b - a))
    tol = 1e-12 * length
    if np.hypot(*(a - s)) <= tol:
        return graded_edge(a, b, max(n + 2, LAYER_POINTS), 0, levels)
    if np.hypot(*(b - s)) <= tol:
        return graded_edge(a, b, max(n + 2, LAYER_POINTS), 1, levels)
    return gauss_edge(a, b, n + 12)


def point_segment_distance(p, a, b):
    d = b - a
    t = np.clip(((p - a) @ d) / (d @ d), 0.0, 1.0)
    return float(np.hypot(*(a + t * d - p)))


def point_polygon_distance(p, coords):
    p = np.asarray(p, float)
    if point_in_polygon(p, coords):
        return 0.0
    nxt = np.roll(coords, -1, axis=0)
    return min(point_segment_distance(p, a, b) for a, b in zip(coords, nxt))


def point_in_polygon(p, coords):
    """Closed point-in-polygon test (boundary points count as inside)."""
    nxt = np.roll(coords, -1, axis=0)
    for a, b in zip(coords, nxt):
        if point_segment_distance(p, a, b) <= 1e-14 * max(1.0, np.abs(coords).max()):
            return True
    x, y = p
    inside = False
    for (x1, y1), (x2, y2) in zip(coords, nxt):
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


# ---------------------------------------------------------------------------
# triangles


def _collapsed(apex, a, b, t, wt, v, wv):
    """Points/weights of {apex + t((1-v)(a-apex) + v(b-apex))}, tensor rule."""
    da, db = a - apex, b - apex
    jac = abs(da[0] * db[1] - da[1] * db[0])
    tt, vv = np.meshgrid(t, v, indexing="ij")
    dirs = (1 - vv)[..., None] * da + vv[..., None] * db
    pts = apex + tt[..., None] * dirs
    w = np.outer(wt, wv) * tt * jac
    return pts.reshape(-1, 2), w.ravel()


def _unit_gauss(n):
    x, w = gauss_legendre(n)
    return 0.5 * (x + 1), 0.5 * w


def triangle_rule(a, b, c, degree):
    """Collapsed Gauss rule on triangle (a, b, c), exact for P_degree."""
    t, wt = _unit_gauss(degree // 2 + 1 + 1)
    v, wv = _unit_gauss(degree // 2 + 1)
    return _collapsed(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float), t, wt, v, wv)


def _fan(coords, centre, degree):
    pts, wts = [], []
    nxt = np.roll(coords, -1, axis=0)
    for a, b in zip(coords, nxt):
        area2 = (a[0] - centre[0]) * (b[1] - centre[1]) - (a[1] - centre[1]) * (b[0] - centre[0])
        if area2 <= 1e-14 * np.abs(coords - centre).max() ** 2:
            continue
        p, w = triangle_rule(centre, a, b, degree)
        pts.append(p)
        wts.append(w)
    return np.vstack(pts), np.concatenate(wts)


def _graded_fan(coords, apex, degree, levels):
    t, wt = graded_unit_rule(max(degree // 2 + 2, LAYER_POINTS), levels)
    v, wv = _unit_gauss(degree // 2 + 7)
    pts, wts = [], []
    nxt = np.roll(coords, -1, axis=0)
    scale = np.abs(coords - apex).max()
    for a, b in zip(coords, nxt):
        area2 = (a[0] - apex[0]) * (b[1] - apex[1]) - (a[1] - apex[1]) * (b[0] - apex[0])
        if area2 <= 1e-13 * scale**2:
            continue
        p, w = _collapsed(apex, a, b, t, wt, v, wv)
        pts.append(p)
        wts.append(w)
    return _separate(np.vstack(pts), np.concatenate(wts), apex)


def _is_convex(coords):
    d = np.roll(coords, -1, axis=0) - coords
    dn = np.roll(d, -1, axis=0)
    cross = d[:, 0] * dn[:, 1] - d[:, 1] * dn[:, 0]
    return bool(np.all(cross >= -1e-12 * np.abs(coords).max() ** 2))


def _ray_line(s, direction, p, q):
    n = np.array([q[1] - p[1], p[0] - q[0]])
    den = n @ direction
    if abs(den) < 1e-300:
        return np.inf
    return (n @ (p - s)) / den


MAX_SECTOR_ANGLE = np.pi / 16


def _sector_rule(coords, s, degree):
    """Radial sweep of a convex polygon seen from an exterior point ``s``."""
    centre = coords.mean(0)
    ref = np.arctan2(*(centre - s)[::-1])
    ang = np.arctan2(coords[:, 1] - s[1], coords[:, 0] - s[0]) - ref
    ang = (ang + np.pi) % (2 * np.pi) - np.pi
    cuts = np.unique(np.round(ang, 15))
    # narrow sectors keep the near-edge bound t1(v) far from its pole
    fine = [cuts[:1]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        m = int(np.ceil((hi - lo) / MAX_SECTOR_ANGLE))
        fine.append(np.linspace(lo, hi, m + 1)[1:])
    cuts = np.concatenate(fine)
    nxt = np.roll(coords, -1, axis=0)
    nt, nv = degree // 2 + 8, degree // 2 + 8
    ts, wts = _unit_gauss(nt)
    vs, wvs = _unit_gauss(nv)
    pts, wts_all = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi) + ref
        d = np.array([np.cos(mid), np.sin(mid)])
        hits = []
        for k, (p, q) in enumerate(zip(coords, nxt)):
            t = _ray_line(s, d, p, q)
            if not np.isfinite(t) or t <= 0:
                continue
            x = s + t * d
            e = q - p
            u = ((x - p) @ e) / (e @ e)
            if -1e-12 <= u <= 1 + 1e-12:
                hits.append((t, k))
        if len(hits) < 2:
            continue
        hits.sort()
        near, far = hits[0][1], hits[-1][1]
        d1 = np.array([np.cos(lo + ref), np.sin(lo + ref)])
        d2 = np.array([np.cos(hi + ref), np.sin(hi + ref)])
        f1 = s + _ray_line(s, d1, coords[far], nxt[far]) * d1
        f2 = s + _ray_line(s, d2, coords[far], nxt[far]) * d2
        da, db = f1 - s, f2 - s
        jac = abs(da[0] * db[1] - da[1] * db[0])
        p, q = coords[near], nxt[near]
        nrm = np.array([q[1] - p[1], p[0] - q[0]])
        dirs = (1 - vs)[:, None] * da + vs[:, None] * db  # (nv, 2)
        t1 = (nrm @ (p - s)) / (dirs @ nrm)  # (nv,)
        t1 = np.clip(t1, 0.0, 1.0)
        tt = t1[None, :] + (1 - t1)[None, :] * ts[:, None]  # (nt, nv)
        w = wts[:, None] * (1 - t1)[None, :] * wvs[None, :] * tt * jac
        pts.append((s + tt[..., None] * dirs[None, :, :]).reshape(-1, 2))
        wts_all.append(w.ravel())
    return np.vstack(pts), np.concatenate(wts_all)


def polygon_rule(coords, degree, singular_point=None, levels=DEFAULT_LEVELS):
    """Quadrature rule on the polygon with counterclockwise vertices ``coords``.

    Without ``singular_point`` the rule is exact for polynomials of
    ``degree``; with one, far elements get a higher-order rule.  If the
    singular point lies on the closure of the element and the element is
    star-shaped with respect to it, the fan is rooted there and graded toward
    it ``levels`` times; if it lies outside but nearby and the element is
    convex, the element is swept radially from it.
    """
    coords = np.asarray(coords, dtype=float)
    if singular_point is not None:
        s = np.asarray(singular_point, dtype=float)
        diam = np.sqrt(((coords[:, None] - coords[None]) ** 2).sum(-1)).max()
        dist = point_polygon_distance(s, coords)
        if dist == 0.0 and in_kernel(coords, s):
            return PolygonRule(*_graded_fan(coords, s, degree, levels))
        if 0.0 < dist < NEAR_FACTOR * diam and _is_convex(coords):
            return PolygonRule(*_sector_rule(coords, s, degree))
        # smooth but non-polynomial integrand: raise the order
        degree = degree + 10
    try:
        centre = kernel_point(coords)
    except MeshError as exc:
        raise MeshError(f"no kernel point found for quadrature: {exc}") from None
    return PolygonRule(*_fan(coords, centre, degree))
