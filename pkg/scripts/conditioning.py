"""Condition estimates of the condensed system, global vs local enrichment.

Also reports the worst local projector condition number, which is where the
global scheme loses accuracy.  Usage: python3 scripts/conditioning.py [--k 3]
"""
import argparse

import numpy as np

from xvem.mesh import build_cartesian_fractured_mesh
from xvem.study import solve_case


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--refine", default="8,16,32,64")
    a = p.parse_args()
    print(f"{'n':>4} {'mode':>7} {'DOFs':>7} {'CondEst':>11} {'max cond(G)':>12} {'H1Error':>11}")
    for n in (int(x) for x in a.refine.split(",")):
        mesh = build_cartesian_fractured_mesh(n)
        for mode in ("global", "local"):
            case = solve_case(mesh, "fracture", a.k, mode, 0.15)
            gcond = max(np.linalg.cond(loc.G[1:, 1:]) for loc in case.disc.locals)
            r = case.report
            print(f"{n:4d} {mode:>7} {r.DOFs:7d} {r.CondEst:11.4e} {gcond:12.3e} {r.H1Error:11.3e}")


if __name__ == "__main__":
    main()
