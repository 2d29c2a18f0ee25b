"""Convergence-study driver.

Configuration comes from an optional ``key = value`` file and command-line
flags; flags win.  One CSV row is written per mesh.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .assembly import SolverError
from .enrichment import ENRICHMENTS, EnrichmentPlan
from .mesh import (build_cartesian_fractured_mesh, build_cartesian_lshape_mesh, build_hexagonal_lshape_mesh,
                   read_mesh)
from .postprocess import fit_report_rates
from .projector import ProjectorError
from .quadrature import DEFAULT_LEVELS
from .spaces import TAU_EDGE, TAU_RANK
from .study import solve_case

log = logging.getLogger("xvem")

COLUMNS = ["MeshSize", "NbCells", "NbEdges", "NbVertices", "DOFs", "L2Error", "H1Error", "CondEst", "Failed"]
DOMAINS = tuple(ENRICHMENTS)
FAMILIES = ("cartesian", "hexagonal", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    domain: str = "fracture"
    mesh_family: str = "cartesian"
    k: int = 1
    enrichment: str = "local"
    gamma: float | None = 0.15
    refine: tuple = (8, 16, 32)
    solver: str = "direct"
    tol: float = 1e-10
    out: str = "convergence.csv"
    mesh_files: tuple = ()
    levels: int = DEFAULT_LEVELS
    tau_rank: float = TAU_RANK
    tau_edge: float = TAU_EDGE
    seed: int = 0
    condition: bool = True

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ConfigError(f"domain must be one of {DOMAINS}")
        if self.mesh_family not in FAMILIES:
            raise ConfigError(f"mesh_family must be one of {FAMILIES}")
        if self.mesh_family == "hexagonal" and self.domain == "fracture":
            raise ConfigError("the hexagonal family is only defined on the L-shaped domains")
        if self.mesh_family == "file" and not self.mesh_files:
            raise ConfigError("mesh_family=file needs mesh_files")
        if not 1 <= self.k <= 4:
            raise ConfigError("k must be in 1..4")
        if self.enrichment == "local" and self.gamma is None:
            raise ConfigError("local enrichment requires gamma")
        if self.solver not in ("direct", "krylov"):
            raise ConfigError("solver must be direct or krylov")
        try:
            EnrichmentPlan(self.enrichment, self.gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def plan(self):
        return EnrichmentPlan(self.enrichment, self.gamma if self.enrichment == "local" else None)


def _parse_list(text, cast):
    if isinstance(text, (list, tuple)):
        return tuple(cast(t) for t in text)
    return tuple(cast(t) for t in str(text).replace(" ", "").split(",") if t)


def _coerce(name, value):
    if name in ("k", "levels", "seed"):
        return int(value)
    if name in ("tol", "tau_rank", "tau_edge"):
        return float(value)
    if name == "gamma":
        return None if value in (None, "", "none", "None") else float(value)
    if name == "refine":
        return _parse_list(value, int)
    if name == "mesh_files":
        return _parse_list(value, str)
    if name == "condition":
        return str(value).lower() in ("1", "true", "yes", "on")
    return str(value)


def read_config(path):
    """Parse ``key = value`` lines (``#`` starts a comment, dashes allowed in keys)."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "mesh_file":
            key = "mesh_files"
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="xvem", description="Convergence studies for the enriched virtual element method.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--domain", choices=DOMAINS)
    p.add_argument("--mesh-family", dest="mesh_family", choices=FAMILIES)
    p.add_argument("--k", type=int)
    p.add_argument("--enrichment", choices=("none", "global", "local"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--refine", help="comma separated refinement parameters (n or hexagonal level)")
    p.add_argument("--mesh-file", dest="mesh_files", action="append", help="mesh file (repeatable)")
    p.add_argument("--solver", choices=("direct", "krylov"))
    p.add_argument("--tol", type=float)
    p.add_argument("--levels", type=int, help="grading levels of singular quadrature")
    p.add_argument("--tau-rank", dest="tau_rank", type=float, help="rank threshold of element fields and moments")
    p.add_argument("--tau-edge", dest="tau_edge", type=float, help="rank threshold of edge complements")
    p.add_argument("--no-condition", dest="condition", action="store_false", default=None)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(argv=None):
    args = build_parser().parse_args(argv)
    values = read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _coerce(f.name, v)
    try:
        return RunConfig(**values), args
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def make_mesh(cfg, item):
    removed = cfg.domain.split("-")[1] if cfg.domain.startswith("lshape") else None
    if cfg.mesh_family == "file":
        return read_mesh(item)
    if cfg.mesh_family == "hexagonal":
        return build_hexagonal_lshape_mesh(int(item), removed)
    if cfg.domain == "fracture":
        return build_cartesian_fractured_mesh(int(item))
    return build_cartesian_lshape_mesh(int(item), removed)


@dataclass
class StudyResult:
    config: RunConfig
    reports: list = field(default_factory=list)  # ErrorReport or None for failed meshes
    failures: list = field(default_factory=list)

    @property
    def successful(self):
        return [r for r in self.reports if r is not None]


def run_mesh(cfg, mesh):
    """Solve on one mesh and return its :class:`ErrorReport`."""
    case = solve_case(mesh, cfg.domain, cfg.k, cfg.enrichment, cfg.gamma, cfg.solver, cfg.tol, cfg.condition,
                      cfg.levels, cfg.tau_rank, cfg.tau_edge)
    return case.report


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{float(v):.11e}"


def write_csv(path, reports):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for rep, meta in reports:
            if rep is None:
                w.writerow([_fmt(meta.get(c)) for c in COLUMNS[:4]] + [""] * 4 + ["1"])
            else:
                d = rep.as_dict()
                w.writerow([_fmt(d[c]) for c in COLUMNS[:-1]] + ["0"])


def run_convergence_study(cfg):
    """Run every mesh of ``cfg`` and write the CSV; returns a :class:`StudyResult`."""
    result = StudyResult(cfg)
    rows = []
    items = cfg.mesh_files if cfg.mesh_family == "file" else cfg.refine
    for item in items:
        mesh = make_mesh(cfg, item)
        try:
            rep = run_mesh(cfg, mesh)
        except (SolverError, ProjectorError, ArithmeticError) as exc:
            log.warning("mesh %s failed: %s", item, exc)
            result.reports.append(None)
            result.failures.append((item, str(exc)))
            rows.append((None, mesh.summary()))
            continue
        log.info("mesh %s: h=%.4g DOFs=%d L2=%.3e H1=%.3e", item, rep.MeshSize, rep.DOFs, rep.L2Error, rep.H1Error)
        result.reports.append(rep)
        rows.append((rep, None))
    write_csv(cfg.out, rows)
    return result


def expected_rates(k):
    """Expected h-slopes ``(L2, H1)`` and the L2 annotation for degree ``k``."""
    if k == 2:
        return k, k, "≥ k (suboptimality documented)"
    return k + 1, k, str(k + 1)


def emit_report(reports, k):
    """Human-readable rate table."""
    reports = [r for r in reports if r is not None]
    if not reports:
        raise ValueError("no successful reports to summarise")
    lines = [f"{'h':>10} {'DOFs':>8} {'L2Error':>12} {'H1Error':>12} {'CondEst':>10}"]
    for r in reports:
        lines.append(f"{r.MeshSize:10.4g} {r.DOFs:8d} {r.L2Error:12.4e} {r.H1Error:12.4e} {r.CondEst:10.3e}")
    if len(reports) >= 2:
        l2_exp, h1_exp, l2_note = expected_rates(k)
        l2 = fit_report_rates(reports, "L2Error")
        h1 = fit_report_rates(reports, "H1Error")
        lines.append(f"L2 rate in h: observed {l2.h_slope:.2f} / expected {l2_note}")
        lines.append(f"H1 rate in h: observed {h1.h_slope:.2f} / expected {h1_exp}")
        lines.append(f"H1 rate in DOFs: observed {h1.dof_slope:.2f} / expected {-h1_exp / 2:g}")
    return "\n".join(lines)


def main(argv=None):
    try:
        cfg, args = config_from_args(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    result = run_convergence_study(cfg)
    ok = result.successful
    if ok:
        print(emit_report(ok, cfg.k))
    for item, msg in result.failures:
        print(f"mesh {item}: FAILED ({msg})")
    print(f"wrote {cfg.out}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
