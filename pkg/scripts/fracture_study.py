"""Fracture benchmark: none / global / local enrichment for k = 1..3.

Writes one CSV per (k, mode) into the output directory and prints the rate
tables.  Usage: python3 scripts/fracture_study.py [--out DIR] [--refine 8,16,32,64]
"""
import argparse
from pathlib import Path

from xvem.cli import RunConfig, emit_report, run_convergence_study


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="results/fracture")
    p.add_argument("--refine", default="8,16,32,64")
    p.add_argument("--k", default="1,2,3")
    p.add_argument("--modes", default="none,global,local")
    a = p.parse_args()
    refine = tuple(int(n) for n in a.refine.split(","))
    for k in (int(x) for x in a.k.split(",")):
        for mode in a.modes.split(","):
            out = Path(a.out) / f"k{k}_{mode}.csv"
            cfg = RunConfig(domain="fracture", k=k, enrichment=mode, gamma=0.15 if mode == "local" else None,
                            refine=refine, out=str(out), condition=mode != "none")
            res = run_convergence_study(cfg)
            print(f"\n== k={k} {mode} ==")
            if res.successful:
                print(emit_report(res.successful, k))
            for item, msg in res.failures:
                print(f"n={item}: failed ({msg})")


if __name__ == "__main__":
    main()
