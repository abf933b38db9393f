"""Exact-solution catalog, error norms, EOC, and the convergence-study runner.

The study runner sweeps cube-skeleton meshes (filling i or per-facet
refinement r), solves with the manufactured solution's data, and reports
L2 errors with estimated orders of convergence under mesh halving
(h ~ 2^-i for filling sweeps, h ~ 2^-r for refinement sweeps).
"""

import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import reference_basis
from .errors import NonPositiveError
from .hypergraph import HyperGraph
from .meshes import FillingSpec, cube_filling
from .solver import DiffusionResult, ProblemData, solve_diffusion

CSV_HEADER = "d,i,r,p,dofs,l2_error,eoc,tau,walltime_s"


@dataclass
class ExactSolution:
    """Manufactured solution with the edge and node data it induces."""

    name: str
    u: object                       # u(points) -> values
    grad: object = None             # grad(points) -> (n, D)
    f_value: float = None           # constant volume source (per edge dim)
    g: object = None                # nodal source density or None

    def problem_data(self, graph: HyperGraph) -> ProblemData:
        f = None
        if self.f_value is not None:
            c = self.f_value

            def f(pts, _c=c):
                return np.full(np.asarray(pts).shape[0], _c)

        return ProblemData(f=f, uD=self.u, g=self.g, f_uniform=True)


def catalog(name: str, graph: HyperGraph = None, kappa: float = 1.0) -> ExactSolution:
    """Named manufactured solutions.

    paper_quadratic: u = -x^2 - y^2 - z^2 with f = 2 d kappa on d-dimensional
    edges and zero nodal sources on the skeleton meshes.
    """
    if name == "paper_quadratic":
        d = graph.dim

        def u(pts):
            pts = np.atleast_2d(pts)
            return -np.sum(pts**2, axis=1)

        def grad(pts):
            return -2.0 * np.atleast_2d(pts)

        return ExactSolution(name=name, u=u, grad=grad, f_value=2.0 * d * kappa)
    if name == "constant":

        def u(pts):
            return np.ones(np.atleast_2d(pts).shape[0])

        def grad(pts):
            return np.zeros_like(np.atleast_2d(pts))

        return ExactSolution(name=name, u=u, grad=grad, f_value=None)
    if name == "linear":

        def u(pts):
            return np.sum(np.atleast_2d(pts), axis=1)

        def grad(pts):
            return np.ones_like(np.atleast_2d(pts))

        return ExactSolution(name=name, u=u, grad=grad, f_value=None)
    raise KeyError(f"unknown exact solution {name!r}")


def l2_error(result: DiffusionResult, exact: ExactSolution) -> float:
    """sqrt of the summed per-edge L2 errors of the reconstructed scalar field."""
    graph = result.graph
    basis = result.basis
    qp, qw = basis.volume_rule.points, basis.volume_rule.weights
    phi = basis.eval_scalar(qp)
    total = 0.0
    for cls in result.classes:
        eids = cls.edge_ids
        corners = np.stack([graph.edges[e].corner for e in eids])
        axes = graph.edges[eids[0]].axes
        pts = corners[:, None, :] + qp @ axes
        exact_vals = np.asarray(exact.u(pts.reshape(-1, pts.shape[-1])))
        exact_vals = exact_vals.reshape(len(eids), -1)
        approx = result.U[eids] @ phi
        measure = graph.edges[eids[0]].measure
        total += measure * float(np.sum(qw * (approx - exact_vals) ** 2))
    return float(np.sqrt(total))


def l2_flux_error(result: DiffusionResult, exact: ExactSolution) -> float:
    """Flux error in the edge frames; reported alongside but not acceptance-gated."""
    graph = result.graph
    basis = result.basis
    qp, qw = basis.volume_rule.points, basis.volume_rule.weights
    phi = basis.eval_scalar(qp)
    total = 0.0
    for cls in result.classes:
        eids = cls.edge_ids
        edge0 = graph.edges[eids[0]]
        corners = np.stack([graph.edges[e].corner for e in eids])
        pts = (corners[:, None, :] + qp @ edge0.axes).reshape(-1, graph.ambient_dim)
        gvals = np.asarray(exact.grad(pts)).reshape(len(eids), -1, graph.ambient_dim)
        unit = edge0.axes / edge0.lengths[:, None]
        kappa = edge0.kappa
        q_exact = -kappa * np.einsum("enD,aD->ean", gvals, unit)
        q_num = np.einsum("eav,vn->ean", result.Q[eids], phi)
        total += edge0.measure * float(np.sum(qw * (q_num - q_exact) ** 2))
    return float(np.sqrt(total))


def eoc(errors) -> list:
    """log2 ratios of consecutive errors under mesh halving."""
    errors = list(errors)
    if any(e <= 0 for e in errors):
        raise NonPositiveError("EOC needs positive errors")
    return [float(np.log2(errors[k - 1] / errors[k])) for k in range(1, len(errors))]


@dataclass
class StudyRow:
    d: int
    i: int
    r: int
    p: int
    dofs: int
    l2_error: float
    eoc: float = None
    tau: float = 1.0
    walltime: float = 0.0


@dataclass
class StudyReport:
    rows: list = field(default_factory=list)
    tau: float = 1.0
    tol: float = 1e-10
    timings: bool = False

    def eoc_column(self):
        return [row.eoc for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            eoc_s = "" if row.eoc is None else f"{row.eoc:.6f}"
            wall_s = f"{row.walltime:.3f}" if self.timings else ""
            buf.write(
                f"{row.d},{row.i},{row.r},{row.p},{row.dofs},"
                f"{row.l2_error:.12e},{eoc_s},{row.tau:g},{wall_s}\n"
            )
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _solve_row(spec: FillingSpec, p: int, tau: float, method: str, tol: float,
               exact_name: str):
    t0 = time.perf_counter()
    graph = cube_filling(spec)
    exact = catalog(exact_name, graph, kappa=spec.kappa)
    result = solve_diffusion(graph, p, exact.problem_data(graph), tau=tau,
                             method=method, tol=tol)
    err = l2_error(result, exact)
    return StudyRow(
        d=spec.edge_dim,
        i=spec.filling,
        r=spec.refinement,
        p=p,
        dofs=result.n_dofs,
        l2_error=err,
        tau=tau,
        walltime=time.perf_counter() - t0,
    )


def convergence_study(plan, p: int = 1, tau: float = 1.0, method: str = "cg_jacobi",
                      tol: float = 1e-10, exact_name: str = "paper_quadratic",
                      jobs: int = 1, timings: bool = False) -> StudyReport:
    """Solve every FillingSpec in the plan and tabulate errors and EOCs.

    Plan rows must share the edge dimension; rows may be solved concurrently
    (jobs > 1) and are reduced in plan order, so the report is identical for
    any job count.
    """
    plan = list(plan)
    if len({s.edge_dim for s in plan}) > 1:
        raise NonPositiveError("a study sweep must keep the edge dimension fixed")
    report = StudyReport(tau=tau, tol=tol, timings=timings)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(lambda s: _solve_row(s, p, tau, method, tol, exact_name), plan)
            )
    else:
        rows = [_solve_row(s, p, tau, method, tol, exact_name) for s in plan]
    errs = [row.l2_error for row in rows]
    rates = eoc(errs)
    for k, row in enumerate(rows):
        row.eoc = None if k == 0 else rates[k - 1]
        report.rows.append(row)
    return report


def filling_plan(d: int, i_values, r: int = 0, kappa: float = 1.0):
    return [FillingSpec(edge_dim=d, filling=i, refinement=r, kappa=kappa)
            for i in i_values]


def refinement_plan(d: int, r_values, i: int = 2, kappa: float = 1.0):
    return [FillingSpec(edge_dim=d, filling=i, refinement=r, kappa=kappa)
            for r in r_values]
