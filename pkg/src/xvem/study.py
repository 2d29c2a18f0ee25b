"""One solve on one mesh, with everything downstream code may want to inspect."""
from __future__ import annotations

from dataclasses import dataclass

from .assembly import solve_problem
from .discretization import Discretization, evaluate_dofs
from .enrichment import EnrichmentPlan
from .postprocess import compute_errors, energy_norm
from .problems import manufactured
from .quadrature import DEFAULT_LEVELS
from .spaces import TAU_EDGE, TAU_RANK


@dataclass(eq=False)
class Case:
    disc: Discretization
    solution: object  # SolveResult
    interpolant: object  # DOFs of the exact solution
    report: object  # ErrorReport

    @property
    def discrete_error(self):
        """|||u_h - I u|||, the energy distance to the interpolant."""
        return energy_norm(self.disc, self.solution.u - self.interpolant)


def solve_case(mesh, domain, k, mode="local", gamma=0.15, solver="direct", tol=1e-10, condition=True,
               levels=DEFAULT_LEVELS, tau=TAU_RANK, tau_edge=TAU_EDGE):
    exact = manufactured(domain)
    plan = EnrichmentPlan(mode, gamma if mode == "local" else None)
    disc = Discretization(mesh, k, exact.space, plan, levels, tau, tau_edge)
    res = solve_problem(disc, exact.source, exact.value, solver, tol, condition)
    Iu = evaluate_dofs(disc, exact.value)
    rep = compute_errors(disc, res.u, exact.value, res.n_dofs, res.cond, interpolant=Iu)
    return Case(disc, res, Iu, rep)
