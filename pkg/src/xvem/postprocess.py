"""Relative error norms, the discrete energy seminorm, and rate fitting."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .discretization import evaluate_dofs
from .projector import elliptic_projector, project_evaluate, reconstruct_trace


@dataclass
class ErrorReport:
    MeshSize: float
    NbCells: int
    NbEdges: int
    NbVertices: int
    DOFs: int
    L2Error: float
    H1Error: float
    CondEst: float = float("nan")

    def as_dict(self):
        return asdict(self)


def projected_norms(disc, v):
    """Per-element ``(||Pi v||_0^2, |Pi v|_1^2)`` from the DOF vector ``v``."""
    n0 = np.zeros(disc.mesh.n_elements)
    n1 = np.zeros(disc.mesh.n_elements)
    for els in disc.groups.values():
        els = np.asarray(els)
        loc = disc.locals[els[0]]
        dv = np.stack([v[disc.element_dofs[e]] for e in els])
        c = dv @ loc.pi_star.T
        n0[els] = np.einsum("ei,ij,ej->e", c, loc.M, c)
        n1[els] = np.einsum("ei,ij,ej->e", c, loc.G, c)
    return n0, n1


def energy_norm(disc, v):
    """sqrt(sum_P v_P^T K_P v_P), the energy norm through the local stiffness."""
    total = 0.0
    for els in disc.groups.values():
        loc = disc.locals[els[0]]
        dv = np.stack([v[disc.element_dofs[e]] for e in els])
        total += np.einsum("ei,ij,ej->", dv, loc.K, dv)
    return float(np.sqrt(max(total, 0.0)))


def compute_errors(disc, u_h, exact, n_dofs=None, cond=float("nan"), interpolant=None):
    """Relative errors of the projected discrete solution.

    Numerators use the projection of ``u_h - I u`` and denominators the
    projection of ``I u``, where ``I u`` is the DOF interpolant of ``exact``
    (a callable ``(points, ref) -> values``).
    """
    Iu = evaluate_dofs(disc, exact) if interpolant is None else interpolant
    e0, e1 = projected_norms(disc, u_h - Iu)
    d0, d1 = projected_norms(disc, Iu)
    s = disc.mesh.summary()
    return ErrorReport(s["MeshSize"], s["NbCells"], s["NbEdges"], s["NbVertices"],
                       int(disc.n_dofs if n_dofs is None else n_dofs),
                       float(np.sqrt(e0.sum() / d0.sum())), float(np.sqrt(e1.sum() / d1.sum())), float(cond))


def discrete_seminorm(disc, v):
    """Energy seminorm |||v||| evaluated pointwise from projections and traces.

    This path evaluates functions at quadrature points instead of reusing the
    local matrices, so it serves as an independent check of the stiffness.
    """
    mesh, space = disc.mesh, disc.space
    total = 0.0
    for el in range(mesh.n_elements):
        loc, xc = disc.locals[el], mesh.centroids[el]
        lv = v[disc.element_dofs[el]]
        proj = elliptic_projector(loc, lv, xc, space)
        pts = loc.points_at(xc)
        grad = project_evaluate(proj, pts, gradients=True)
        total += np.sum(loc.weights * (grad**2).sum(axis=1))
        pv = project_evaluate(proj, pts)
        r3 = lv[loc.d3_cols] - loc.moments.values @ (loc.weights * pv)
        total += r3 @ r3 / loc.h**2
        trace = reconstruct_trace(mesh, el, lv, loc, disc.edge_spaces)
        for i, es in enumerate(trace.edge_spaces):
            diff = trace.values(i) - project_evaluate(proj, es.rule.points)
            total += np.sum(es.rule.weights * diff**2) / loc.h
    return float(np.sqrt(max(total, 0.0)))


@dataclass
class RateFit:
    h_slopes: np.ndarray  # pairwise slopes of log(error) against log(h)
    dof_slopes: np.ndarray  # pairwise slopes against log(DOFs)
    h_slope: float  # least squares over the last (up to) three meshes
    dof_slope: float


def _lsq_slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


def fit_rates(h, errors, dofs=None, last=3):
    """Convergence slopes of ``errors`` in ``h`` (and in ``dofs`` if given)."""
    h = np.asarray(h, float)
    err = np.asarray(errors, float)
    if len(h) < 2 or len(h) != len(err):
        raise ValueError("need at least two (h, error) pairs of equal length")
    if not (np.all(np.diff(h) < 0) or np.all(np.diff(h) > 0)):
        raise ValueError("mesh sizes must be strictly monotone")
    lh, le = np.log(h), np.log(err)
    hs = np.diff(le) / np.diff(lh)
    tail = slice(max(0, len(h) - last), None)
    h_slope = _lsq_slope(lh[tail], le[tail])
    if dofs is None:
        return RateFit(hs, np.full(len(hs), np.nan), h_slope, float("nan"))
    ld = np.log(np.asarray(dofs, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = np.diff(le) / np.diff(ld)
    return RateFit(hs, ds, h_slope, _lsq_slope(ld[tail], le[tail]))


def fit_report_rates(reports, attr, last=3):
    return fit_rates([r.MeshSize for r in reports], [getattr(r, attr) for r in reports],
                     [r.DOFs for r in reports], last)
