"""L-shaped benchmark on the hexagonal (or Cartesian) family, locally enriched.

Usage: python3 scripts/lshape_study.py [--family hexagonal] [--refine 2,3,4,5] [--removed tr]
"""
import argparse
from pathlib import Path

from xvem.cli import RunConfig, emit_report, run_convergence_study


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="results/lshape")
    p.add_argument("--family", default="hexagonal", choices=("hexagonal", "cartesian"))
    p.add_argument("--refine", default="2,3,4,5")
    p.add_argument("--removed", default="tr", choices=("tr", "br"))
    p.add_argument("--modes", default="local")
    a = p.parse_args()
    refine = tuple(int(n) for n in a.refine.split(","))
    for k in (1, 2, 3):
        for mode in a.modes.split(","):
            cfg = RunConfig(domain=f"lshape-{a.removed}", mesh_family=a.family, k=k, enrichment=mode,
                            gamma=0.15 if mode == "local" else None, refine=refine,
                            out=str(Path(a.out) / f"{a.family}_k{k}_{mode}.csv"))
            res = run_convergence_study(cfg)
            print(f"\n== k={k} {mode} ({a.family}) ==")
            if res.successful:
                print(emit_report(res.successful, k))


if __name__ == "__main__":
    main()
