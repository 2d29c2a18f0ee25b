"""Global assembly, Dirichlet elimination, static condensation and solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Linear solve did not reach the requested tolerance."""

    def __init__(self, message, residual=np.nan):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# local contributions


def local_stiffness(disc, el):
    return disc.locals[el].K


def local_load(disc, el, f):
    """Load vector of element ``el``: moments of ``f`` on the D3 directions."""
    loc = disc.locals[el]
    xc = disc.mesh.centroids[el]
    pts = loc.points_at(xc)
    F = np.zeros(loc.n_local)
    F[loc.d3_cols] = loc.moments.values @ (loc.weights * np.asarray(f(pts, np.tile(xc, (len(pts), 1))), float))
    return F


# ---------------------------------------------------------------------------
# global system


@dataclass(eq=False)
class GlobalSystem:
    disc: object
    A: sps.csr_matrix
    rhs: np.ndarray
    fixed: np.ndarray = None  # boolean mask of Dirichlet DOFs
    values: np.ndarray = None  # prescribed values on ``fixed``

    @property
    def size(self):
        return self.A.shape[0]


def _group_arrays(disc):
    for els in disc.groups.values():
        els = np.asarray(els)
        yield disc.locals[els[0]], els, np.stack([disc.element_dofs[e] for e in els])


def assemble(disc, f=None):
    """Sparse stiffness and load, scattered group by group."""
    mesh = disc.mesh
    rows, cols, vals = [], [], []
    rhs = np.zeros(disc.n_dofs)
    for loc, els, dofs in _group_arrays(disc):
        n = loc.n_local
        rows.append(np.repeat(dofs, n, axis=1).ravel())
        cols.append(np.tile(dofs, (1, n)).ravel())
        vals.append(np.broadcast_to(loc.K.ravel(), (len(els), n * n)).ravel())
        if f is not None:
            pts = np.concatenate([loc.points_at(mesh.centroids[e]) for e in els])
            refs = np.repeat(mesh.centroids[els], len(loc.weights), axis=0)
            fv = np.asarray(f(pts, refs), float).reshape(len(els), -1)
            np.add.at(rhs, dofs[:, loc.d3_cols], (fv * loc.weights) @ loc.moments.values.T)
    size = disc.n_dofs
    A = sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(size, size)).tocsr()
    A.sum_duplicates()
    return GlobalSystem(disc, A, rhs)


def boundary_dofs(disc, g):
    """Dirichlet DOFs: boundary vertex values and boundary-edge moments of ``g``."""
    mesh, lay = disc.mesh, disc.layout
    fixed = np.zeros(disc.n_dofs, dtype=bool)
    values = np.zeros(disc.n_dofs)
    vb = np.flatnonzero(mesh.vertex_on_boundary)
    fixed[vb] = True
    gv = np.asarray(g(mesh.vertices[vb], disc.vertex_ref[vb]), float)
    if not np.all(np.isfinite(gv)):
        raise ValueError("boundary data is not finite at a boundary vertex")
    values[vb] = gv
    for e in np.flatnonzero(mesh.edge_on_boundary):
        es = disc.edge_spaces[e]
        if not es.n_dofs:
            continue
        idx = lay.edge_dofs(e)
        ref = np.tile(mesh.centroids[mesh.edge_elements[e, 0]], (len(es.rule.weights), 1))
        fixed[idx] = True
        values[idx] = es.dof_values @ (es.rule.weights * np.asarray(g(es.rule.points, ref), float))
    return fixed, values


def apply_dirichlet(system, g):
    """Record the Dirichlet data; elimination happens in :func:`static_condense`."""
    if g is None:
        fixed = np.zeros(system.size, dtype=bool)
        fixed[np.flatnonzero(system.disc.mesh.vertex_on_boundary)] = True
        values = np.zeros(system.size)
        for e in np.flatnonzero(system.disc.mesh.edge_on_boundary):
            fixed[system.disc.layout.edge_dofs(e)] = True
    else:
        fixed, values = boundary_dofs(system.disc, g)
    system.fixed, system.values = fixed, values
    return system


@dataclass(eq=False)
class CondensedSystem:
    S: sps.csr_matrix  # Schur complement on the skeleton unknowns
    rhs: np.ndarray
    skeleton: np.ndarray  # global indices of the remaining unknowns
    interior: np.ndarray  # global indices of the D3 unknowns
    Aii_inv: sps.csr_matrix
    Ais: sps.csr_matrix
    b_i: np.ndarray  # interior load after Dirichlet lifting
    system: GlobalSystem = field(repr=False, default=None)

    @property
    def n_dofs(self):
        return len(self.skeleton)

    def recover(self, x_skeleton):
        sysm = self.system
        u = np.where(sysm.fixed, sysm.values, 0.0)
        u[self.skeleton] = x_skeleton
        u[self.interior] = self.Aii_inv @ (self.b_i - self.Ais @ x_skeleton)
        return u


def _block_inverse(disc, interior_pos):
    """Sparse inverse of the block-diagonal D3-D3 part of the stiffness."""
    rows, cols, vals = [], [], []
    for loc, els, dofs in _group_arrays(disc):
        d3 = dofs[:, loc.d3_cols]
        blk = loc.K[np.ix_(loc.d3_cols, loc.d3_cols)]
        try:
            inv = np.linalg.inv(blk)
        except np.linalg.LinAlgError:
            raise SolverError(f"singular interior block on element {els[0]}") from None
        p = interior_pos[d3]
        n = p.shape[1]
        rows.append(np.repeat(p, n, axis=1).ravel())
        cols.append(np.tile(p, (1, n)).ravel())
        vals.append(np.broadcast_to(inv.ravel(), (len(els), n * n)).ravel())
    m = int(interior_pos.max()) + 1 if len(interior_pos) else 0
    return sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(m, m)).tocsr()


def static_condense(system):
    """Eliminate Dirichlet DOFs and every element's D3 block."""
    if system.fixed is None:
        raise ValueError("apply_dirichlet must be called first")
    disc, A = system.disc, system.A
    moment = disc.layout.moment_mask
    interior = np.flatnonzero(moment)
    skeleton = np.flatnonzero(~moment & ~system.fixed)
    fixed = np.flatnonzero(system.fixed)
    pos = np.full(system.size, -1, dtype=np.int64)
    pos[interior] = np.arange(len(interior))
    Aii_inv = _block_inverse(disc, pos)
    g = system.values[fixed]
    Ass = A[skeleton][:, skeleton]
    Asi = A[skeleton][:, interior]
    Ais = A[interior][:, skeleton]
    b_s = system.rhs[skeleton] - A[skeleton][:, fixed] @ g
    b_i = system.rhs[interior] - A[interior][:, fixed] @ g
    S = (Ass - Asi @ (Aii_inv @ Ais)).tocsr()
    S = 0.5 * (S + S.T)
    rhs = b_s - Asi @ (Aii_inv @ b_i)
    return CondensedSystem(S.tocsr(), rhs, skeleton, interior, Aii_inv, Ais.tocsr(), b_i, system)


# ---------------------------------------------------------------------------
# solvers


def lanczos_extremes(matvec, n, iterations=30, seed=0):
    """Extreme Ritz values of a symmetric operator after a short Lanczos run."""
    rng = np.random.default_rng(seed)
    m = min(iterations, n)
    Q = np.zeros((n, m + 1))
    q = rng.standard_normal(n)
    Q[:, 0] = q / np.linalg.norm(q)
    alpha, beta = np.zeros(m), np.zeros(m)
    for j in range(m):
        w = matvec(Q[:, j])
        alpha[j] = Q[:, j] @ w
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)  # full reorthogonalisation
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14 * abs(alpha[: j + 1]).max():
            m = j + 1
            break
        Q[:, j + 1] = w / beta[j]
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    ritz = np.linalg.eigvalsh(T)
    return ritz[0], ritz[-1]


def condition_estimate(S, factor=None, iterations=30):
    """lambda_max from Lanczos on S; lambda_min from Lanczos on S^-1."""
    n = S.shape[0]
    if n == 0:
        return 1.0
    if n <= 200:
        ev = np.linalg.eigvalsh(S.toarray())
        return float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
    if factor is None:
        factor = spla.splu(S.tocsc())
    _, lmax = lanczos_extremes(lambda v: S @ v, n, iterations)
    _, inv_max = lanczos_extremes(factor.solve, n, iterations, seed=1)
    return float(lmax * inv_max)


@dataclass
class SolveResult:
    u: np.ndarray  # full DOF vector
    residual: float
    cond: float
    n_dofs: int
    iterations: int = 0


def solve(condensed, solver="direct", tol=1e-10, maxiter=None, estimate_condition=True):
    """Solve the condensed system and recover every DOF."""
    S, b = condensed.S, condensed.rhs
    n = S.shape[0]
    bnorm = np.linalg.norm(b)
    factor = None
    its = 0
    if n == 0:
        x = np.zeros(0)
    elif solver == "direct":
        factor = spla.splu(S.tocsc())
        x = factor.solve(b)
    elif solver == "krylov":
        counter = [0]

        def cb(_):
            counter[0] += 1

        diag = S.diagonal()
        M = sps.diags(1.0 / np.where(diag > 0, diag, 1.0))
        x, info = spla.cg(S, b, rtol=tol, atol=0.0, maxiter=maxiter or 10 * n, M=M, callback=cb)
        its = counter[0]
        if info != 0:
            res = np.linalg.norm(S @ x - b) / (bnorm or 1.0)
            raise SolverError(f"CG did not converge in {its} iterations (residual {res:.2e})", res)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    res = float(np.linalg.norm(S @ x - b) / bnorm) if n and bnorm > 0 else 0.0
    if res > tol:
        raise SolverError(f"relative residual {res:.2e} exceeds tolerance {tol:.0e}", res)
    cond = condition_estimate(S, factor) if estimate_condition else np.nan
    return SolveResult(condensed.recover(x), res, cond, n, its)


def solve_problem(disc, f, g, solver="direct", tol=1e-10, estimate_condition=True):
    """Assemble, constrain, condense and solve in one call."""
    system = apply_dirichlet(assemble(disc, f), g)
    return solve(static_condense(system), solver, tol, estimate_condition=estimate_condition)
