"""Command-line frontend.

Subcommands: mesh | solve | convergence | epsilon-study.  Options may come
from flags or a JSON config file (flags win); --dump-config prints the
effective configuration for exact reproduction.  Exit codes: 0 success,
2 validation/usage error, 1 solver failure.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .analysis import catalog, convergence_study, filling_plan, l2_error, refinement_plan
from .errors import (
    HyperHDGError,
    NoConvergence,
    NonPositiveError,
    SingularLocalSystem,
    SolveFailure,
)
from .hypergraph import load_graph, save_graph
from .meshes import FillingSpec, cube_filling, path_graph, star_graph
from .skeletal import dump_matrix_market
from .solver import ProblemData, solve_diffusion
from .thin import ThinDomainSpec, epsilon_sweep

DEFAULTS = {
    "mesh": {
        "d": 2, "filling": 0, "refinement": 0, "kappa": 1.0, "out": "mesh.json",
    },
    "solve": {
        "mesh": "star3", "d": None, "filling": None, "refinement": 0,
        "kappa": 1.0, "p": 1, "tau": 1.0, "exact": "star-oracle",
        "method": "cg_jacobi", "tol": 1e-10, "out": None, "dump_system": None,
    },
    "convergence": {
        "d": 3, "p": 1, "tau": 1.0, "filling": "0..3", "refine": None,
        "at_filling": 2, "kappa": 1.0, "exact": "paper_quadratic",
        "method": "cg_jacobi", "tol": 1e-10, "out": "study.csv",
        "jobs": None, "timings": False,
    },
    "epsilon-study": {
        "arms": 3, "eps": "0.2,0.1,0.05,0.025", "lengths": None,
        "thickness": None, "kappa_arms": None, "kappa_node": 1.0,
        "far_values": "0,0,1", "g": 0.0, "alpha": 0.5, "unweighted": False,
        "out": "sweep.csv",
    },
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperhdg",
                                 description="Hybrid DG diffusion on hypergraphs")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    common.add_argument("--jobs", type=int,
                        help="worker threads (env HYPERHDG_JOBS)")

    p = sub.add_parser("mesh", parents=[common], help="emit an interchange file")
    p.add_argument("--d", type=int)
    p.add_argument("--filling", "-i", type=int, dest="filling")
    p.add_argument("--refinement", "-r", type=int, dest="refinement")
    p.add_argument("--kappa", type=float)
    p.add_argument("--out")

    p = sub.add_parser("solve", parents=[common], help="single diffusion solve")
    p.add_argument("--mesh", help="starN | pathN | interchange.json | 'filling'")
    p.add_argument("--d", type=int)
    p.add_argument("--filling", "-i", type=int, dest="filling")
    p.add_argument("--refinement", "-r", type=int, dest="refinement")
    p.add_argument("--kappa", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--exact", help="star-oracle | paper_quadratic | constant | linear")
    p.add_argument("--method", choices=["cg_jacobi", "direct"])
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="write the skeletal trace as CSV")
    p.add_argument("--dump-system", dest="dump_system",
                   help="write the reduced system in Matrix Market format")

    p = sub.add_parser("convergence", parents=[common], help="error/EOC study")
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--filling", help="range like 0..3 (filling sweep)")
    p.add_argument("--refine", help="range like 0..3 (refinement sweep)")
    p.add_argument("--at-filling", type=int, dest="at_filling",
                   help="fixed filling level for refinement sweeps")
    p.add_argument("--kappa", type=float)
    p.add_argument("--exact")
    p.add_argument("--method", choices=["cg_jacobi", "direct"])
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.add_argument("--timings", action="store_true", default=None,
                   help="record wall times in the CSV (breaks byte-identity)")

    p = sub.add_parser("epsilon-study", parents=[common],
                       help="thin-domain singular-limit sweep")
    p.add_argument("--arms", type=int)
    p.add_argument("--eps", help="comma list, strictly decreasing")
    p.add_argument("--lengths", help="comma list, one per arm")
    p.add_argument("--thickness", help="comma list of thickness factors d_i")
    p.add_argument("--kappa-arms", dest="kappa_arms", help="comma list")
    p.add_argument("--kappa-node", dest="kappa_node", type=float)
    p.add_argument("--far-values", dest="far_values",
                   help="comma list; 'n' marks a Neumann far end")
    p.add_argument("--g", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--unweighted", action="store_true", default=None,
                   help="compare against the raw (unweighted) graph problem")
    p.add_argument("--out")
    return ap


def _effective_config(args: argparse.Namespace) -> dict:
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    cfg["jobs"] = None
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        loaded.pop("command", None)
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg.get("jobs") is None:
        cfg["jobs"] = int(os.environ.get("HYPERHDG_JOBS", "1"))
    return cfg


def _parse_range(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text)
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",")]


def _parse_floats(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",")]


def _parse_far_values(text, arms):
    if text is None:
        return None
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    vals = [None if str(v).strip().lower() in ("n", "none", "") else float(v)
            for v in items]
    if len(vals) != arms:
        raise ValueError(f"need {arms} far values, got {len(vals)}")
    return tuple(vals)


def _load_mesh(cfg):
    name = cfg.get("mesh")
    if name and name.startswith("star"):
        return star_graph(int(name[4:])), name
    if name and name.startswith("path"):
        return path_graph(int(name[4:])), name
    if name and name not in (None, "filling"):
        return load_graph(name), name
    spec = FillingSpec(edge_dim=cfg["d"], filling=cfg["filling"],
                       refinement=cfg.get("refinement") or 0,
                       kappa=cfg.get("kappa", 1.0))
    return cube_filling(spec), "filling"


def _star_oracle_data(graph) -> ProblemData:
    """Outer end of the last arm at value one, the others zero."""
    ends = [graph.nodes[i].corner for i in range(1, len(graph.nodes))]
    hot = ends[-1]

    def uD(pts):
        pts = np.atleast_2d(pts)
        return (np.max(np.abs(pts - hot), axis=1) < 1e-12).astype(float)

    return ProblemData(uD=uD)


def _cmd_mesh(cfg) -> int:
    spec = FillingSpec(edge_dim=cfg["d"], filling=cfg["filling"],
                       refinement=cfg["refinement"], kappa=cfg["kappa"])
    graph = cube_filling(spec)
    save_graph(graph, cfg["out"])
    print(f"mesh d={cfg['d']} i={cfg['filling']} r={cfg['refinement']} "
          f"edges={len(graph.edges)} nodes={len(graph.nodes)} out={cfg['out']}")
    return 0


def _cmd_solve(cfg) -> int:
    t0 = time.perf_counter()
    graph, kind = _load_mesh(cfg)
    exact_key = cfg["exact"]
    exact = None
    if exact_key == "star-oracle":
        data = _star_oracle_data(graph)
    else:
        exact = catalog(exact_key, graph, kappa=cfg.get("kappa", 1.0))
        data = exact.problem_data(graph)
    result = solve_diffusion(graph, cfg["p"], data, tau=cfg["tau"],
                             method=cfg["method"], tol=cfg["tol"])
    err = l2_error(result, exact) if exact is not None else None
    if cfg.get("dump_system"):
        dump_matrix_market(result.system, cfg["dump_system"])
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write("node,dof,lambda\n")
            dpn = result.dofmap.dofs_per_node
            for k, v in enumerate(result.lam):
                fh.write(f"{k // dpn},{k % dpn},{v:.12e}\n")
    wall = time.perf_counter() - t0
    err_s = "nan" if err is None else f"{err:.12e}"
    print(f"summary dofs={result.n_dofs} l2_error={err_s} "
          f"iterations={result.iterations} walltime_s={wall:.3f}")
    if kind.startswith("star"):
        print(f"center_lambda={result.lam[0]:.12f}")
    return 0


def _cmd_convergence(cfg) -> int:
    t0 = time.perf_counter()
    if cfg.get("refine") is not None:
        plan = refinement_plan(cfg["d"], _parse_range(cfg["refine"]),
                               i=cfg["at_filling"], kappa=cfg["kappa"])
    else:
        plan = filling_plan(cfg["d"], _parse_range(cfg["filling"]),
                            kappa=cfg["kappa"])
    report = convergence_study(plan, p=cfg["p"], tau=cfg["tau"],
                               method=cfg["method"], tol=cfg["tol"],
                               exact_name=cfg["exact"], jobs=cfg["jobs"],
                               timings=bool(cfg["timings"]))
    report.write_csv(cfg["out"])
    last = report.rows[-1]
    eocs = ["--" if r.eoc is None else f"{r.eoc:.2f}" for r in report.rows]
    wall = time.perf_counter() - t0
    print(f"summary dofs={last.dofs} l2_error={last.l2_error:.12e} "
          f"iterations={len(report.rows)} walltime_s={wall:.3f}")
    print(f"eoc_column={','.join(eocs)} out={cfg['out']}")
    if cfg["p"] >= 2:
        worst = max(r.l2_error for r in report.rows)
        print(f"exactness_check max_error={worst:.3e} "
              f"{'PASS' if worst <= 1e-9 else 'FAIL'}")
    return 0


def _cmd_epsilon(cfg) -> int:
    t0 = time.perf_counter()
    arms = cfg["arms"]
    spec = ThinDomainSpec(
        arms=arms,
        eps=_parse_floats(cfg["eps"])[0],
        lengths=_parse_floats(cfg.get("lengths")),
        thickness=_parse_floats(cfg.get("thickness")),
        kappa_arms=_parse_floats(cfg.get("kappa_arms")),
        kappa_node=cfg["kappa_node"],
        g=cfg["g"],
        far_values=_parse_far_values(cfg.get("far_values"), arms),
        alpha=cfg["alpha"],
    )
    report = epsilon_sweep(spec, _parse_floats(cfg["eps"]),
                           weighted=not cfg["unweighted"])
    report.write_csv(cfg["out"])
    totals = report.totals()
    wall = time.perf_counter() - t0
    print(f"summary dofs={len(report.entries)} "
          f"l2_error={totals[-1][1]:.12e} iterations={len(totals)} "
          f"walltime_s={wall:.3f}")
    print("discrepancies=" + ",".join(f"{t:.6e}" for _, t in totals)
          + f" out={cfg['out']}")
    return 0


def run(argv=None) -> int:
    """Dispatch a CLI invocation; returns the process exit code."""
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _effective_config(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        print(json.dumps({"command": args.command, **cfg}, indent=1, sort_keys=True))
        return 0
    try:
        if args.command == "mesh":
            return _cmd_mesh(cfg)
        if args.command == "solve":
            return _cmd_solve(cfg)
        if args.command == "convergence":
            return _cmd_convergence(cfg)
        if args.command == "epsilon-study":
            return _cmd_epsilon(cfg)
        return 2
    except (NoConvergence, SolveFailure, SingularLocalSystem) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    except (HyperHDGError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
