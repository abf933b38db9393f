"""Thin-domain laboratory for the singular limit.

Solves steady diffusion with conforming bilinear elements on a 2D domain made
of m thin rectangular arms (width d_i * eps) joined at a node hull of
diameter ~eps, then sweeps eps downward and measures how the arm midline
traces approach the limiting graph solution computed by the skeletal solver
with effective conductivities d_i * kappa_i and loads d_i * f_i.

Arms leave the origin along the axis directions +x, +y, -x, -y (in that
order).  The node hull is the axis-aligned box that recedes each arm by
alpha * eps and covers the thickest perpendicular arm; it carries the source
density g / (eps |omega|), so a fixed nodal density g survives the limit as a
point source at the junction.
"""

import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import OverlapError, SolveFailure
from .meshes import star_graph
from .solver import ProblemData, solve_diffusion

SWEEP_CSV_HEADER = "eps,h,arm,midline_l2_discrepancy,energy_over_eps"

_DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


@dataclass
class ThinDomainSpec:
    """Geometry and data of the thin junction problem.

    far_values[i] is a strong Dirichlet value at arm i's far end, or None for
    the natural zero-flux condition; at least one arm must be Dirichlet.
    f_arms entries are constants or callables of 2D points.
    """

    arms: int = 3
    eps: float = 0.1
    lengths: tuple = None
    thickness: tuple = None
    kappa_arms: tuple = None
    kappa_node: float = 1.0
    f_arms: tuple = None
    g: object = 0.0
    far_values: tuple = None
    alpha: float = 0.5

    def __post_init__(self):
        m = self.arms
        if not 1 <= m <= 4:
            raise OverlapError(f"the 2D lab supports 1..4 axis-aligned arms, got {m}")
        self.lengths = tuple(self.lengths) if self.lengths else (1.0,) * m
        self.thickness = tuple(self.thickness) if self.thickness else (1.0,) * m
        self.kappa_arms = tuple(self.kappa_arms) if self.kappa_arms else (1.0,) * m
        self.f_arms = tuple(self.f_arms) if self.f_arms is not None else (0.0,) * m
        if self.far_values is None:
            self.far_values = (None,) * (m - 1) + (0.0,)
        else:
            self.far_values = tuple(self.far_values)
        if any(t <= 0 for t in self.thickness) or any(l <= 0 for l in self.lengths):
            raise OverlapError("arm lengths and thickness factors must be positive")
        if self.eps <= 0 or self.alpha <= 0:
            raise OverlapError("eps and alpha must be positive")
        if all(v is None for v in self.far_values):
            raise OverlapError("at least one far end must carry a Dirichlet value")

    def directions(self):
        return _DIRECTIONS[: self.arms]

    def hull_half_extents(self):
        """(hx, hy): hull half-widths; recession distance for the aligned arms,
        wide enough to cover the thickest perpendicular arm."""
        dirs = self.directions()
        x_arms = [i for i in range(self.arms) if dirs[i][0] != 0]
        y_arms = [i for i in range(self.arms) if dirs[i][1] != 0]
        hx = max([self.alpha] + [self.thickness[i] / 2 for i in y_arms]) \
            if y_arms else self.alpha
        widths_x = [self.thickness[i] / 2 for i in x_arms]
        hy = max(([self.alpha] if y_arms else []) + widths_x) if x_arms else self.alpha
        return self.eps * hx, self.eps * hy

    def omega_area(self) -> float:
        """Area of the reference hull omega (hull area / eps^2)."""
        hx, hy = self.hull_half_extents()
        return (2 * hx / self.eps) * (2 * hy / self.eps)


def default_h_rule(eps: float) -> dict:
    """Mesh sizes: eps/4 across arm thickness, ~eps along arms near the hull,
    geometric coarsening away from the junction."""
    return {"h_cross": eps / 4.0, "h_near": eps, "growth": 1.3, "h_max": 0.08}


def _graded_sizes(span: float, h0: float, growth: float, h_max: float) -> np.ndarray:
    """Cell sizes filling span, starting near h0 and growing to at most h_max."""
    sizes = []
    h = min(h0, span)
    total = 0.0
    while total + h < span - 1e-12:
        sizes.append(h)
        total += h
        h = min(h * growth, h_max)
    sizes.append(span - total)
    out = np.asarray(sizes)
    return out * (span / out.sum())


def _arm_box(spec: ThinDomainSpec, i: int):
    """(x0, x1, y0, y1) of arm i's recessed rectangle."""
    hx, hy = spec.hull_half_extents()
    d = spec.directions()[i]
    w = spec.thickness[i] * spec.eps / 2.0
    L = spec.lengths[i]
    if d[0] > 0:
        return (hx, L, -w, w)
    if d[0] < 0:
        return (-L, -hx, -w, w)
    if d[1] > 0:
        return (-w, w, hy, L)
    return (-w, w, -L, -hy)


@dataclass
class ThinMesh:
    """Conforming tensor-line quad mesh restricted to hull plus arms."""

    spec: ThinDomainSpec
    xticks: np.ndarray
    yticks: np.ndarray
    cells: np.ndarray        # (n_cells, 4) node ids, corner order (00, 10, 01, 11)
    cell_region: np.ndarray  # (n_cells,) -1 for hull, arm index otherwise
    cell_boxes: np.ndarray   # (n_cells, 4): x0, y0, hx, hy
    node_xy: np.ndarray      # (n_nodes, 2)

    @property
    def n_nodes(self) -> int:
        return self.node_xy.shape[0]

    def area(self) -> float:
        return float(np.sum(self.cell_boxes[:, 2] * self.cell_boxes[:, 3]))


def build_thin_mesh(spec: ThinDomainSpec, h_rule=None) -> ThinMesh:
    """Tensor-line mesh of the hull-plus-arms union.

    Every region boundary lies on a mesh line, so the mesh conforms to the
    arm interfaces; raises OverlapError when the hull would swallow an arm or
    an arm gets fewer than 4 cells across its thickness.
    """
    rule = (h_rule or default_h_rule)(spec.eps)
    h_cross, h_near = rule["h_cross"], rule["h_near"]
    growth, h_max = rule["growth"], rule["h_max"]
    hx, hy = spec.hull_half_extents()
    boxes = [_arm_box(spec, i) for i in range(spec.arms)]
    for i, (x0, x1, y0, y1) in enumerate(boxes):
        horizontal = spec.directions()[i][0] != 0
        along = (x1 - x0) if horizontal else (y1 - y0)
        if along <= 2 * max(hx, hy):
            raise OverlapError(
                f"arm {i}: eps {spec.eps} too large, the recession swallows the arm"
            )

    def axis_ticks(axis: int) -> np.ndarray:
        lo_hull, hi_hull = (-hx, hx) if axis == 0 else (-hy, hy)
        mandatory = {lo_hull, hi_hull, 0.0}
        for box in boxes:
            mandatory.update((box[0], box[1]) if axis == 0 else (box[2], box[3]))
        mandatory = np.array(sorted(mandatory))
        pieces = [np.array([mandatory[0]])]
        for a, b in zip(mandatory[:-1], mandatory[1:]):
            if b - a < 1e-14:
                continue
            if a >= hi_hull - 1e-14:        # along an arm pointing to +axis
                sizes = _graded_sizes(b - a, h_near, growth, h_max)
                pieces.append(a + np.cumsum(sizes))
            elif b <= lo_hull + 1e-14:      # along an arm pointing to -axis
                sizes = _graded_sizes(b - a, h_near, growth, h_max)[::-1]
                pieces.append(a + np.cumsum(sizes))
            else:                           # hull / cross-thickness band
                n = max(2, int(np.ceil((b - a) / h_cross - 1e-12)))
                pieces.append(a + (b - a) * np.arange(1, n + 1) / n)
        return np.concatenate(pieces)

    xt, yt = axis_ticks(0), axis_ticks(1)

    for i, box in enumerate(boxes):
        horizontal = spec.directions()[i][0] != 0
        ticks = yt if horizontal else xt
        w0, w1 = (box[2], box[3]) if horizontal else (box[0], box[1])
        cells_across = np.sum((ticks > w0 + 1e-14) & (ticks < w1 - 1e-14)) + 1
        if cells_across < 4:
            raise OverlapError(f"arm {i}: fewer than 4 cells across the thickness")

    def region_of(cx: float, cy: float) -> int:
        for i, (x0, x1, y0, y1) in enumerate(boxes):
            if x0 < cx < x1 and y0 < cy < y1:
                return i
        if -hx < cx < hx and -hy < cy < hy:
            return -1
        return -2

    node_ids, node_xy = {}, []

    def node(ix, iy):
        key = (ix, iy)
        if key not in node_ids:
            node_ids[key] = len(node_xy)
            node_xy.append((xt[ix], yt[iy]))
        return node_ids[key]

    cells, regions, cboxes = [], [], []
    for ix in range(len(xt) - 1):
        for iy in range(len(yt) - 1):
            reg = region_of(0.5 * (xt[ix] + xt[ix + 1]), 0.5 * (yt[iy] + yt[iy + 1]))
            if reg == -2:
                continue
            cells.append(
                (node(ix, iy), node(ix + 1, iy), node(ix, iy + 1), node(ix + 1, iy + 1))
            )
            regions.append(reg)
            cboxes.append((xt[ix], yt[iy], xt[ix + 1] - xt[ix], yt[iy + 1] - yt[iy]))

    return ThinMesh(
        spec=spec,
        xticks=xt,
        yticks=yt,
        cells=np.asarray(cells, dtype=np.int64),
        cell_region=np.asarray(regions, dtype=np.int64),
        cell_boxes=np.asarray(cboxes),
        node_xy=np.asarray(node_xy),
    )


def _q1_reference():
    """2x2 Gauss data and gradient stiffness parts of the bilinear element."""
    gp = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
    pts = np.array([(x, y) for x in gp for y in gp])
    w = np.full(4, 0.25)
    x, y = pts[:, 0], pts[:, 1]
    N = np.stack([(1 - x) * (1 - y), x * (1 - y), (1 - x) * y, x * y], axis=1)
    dNdx = np.stack([-(1 - y), (1 - y), -y, y], axis=1)
    dNdy = np.stack([-(1 - x), -x, (1 - x), x], axis=1)
    Kxx = sum(w[q] * np.outer(dNdx[q], dNdx[q]) for q in range(4))
    Kyy = sum(w[q] * np.outer(dNdy[q], dNdy[q]) for q in range(4))
    return pts, w, N, Kxx, Kyy


_Q1_PTS, _Q1_W, _Q1_N, _Q1_KXX, _Q1_KYY = _q1_reference()


@dataclass
class ThinSolution:
    """Nodal bilinear FEM solution on the thin domain."""

    mesh: ThinMesh
    u: np.ndarray
    kappa_cells: np.ndarray
    dirichlet: np.ndarray

    def midline(self, arm: int):
        """(arc coordinate from the junction, nodal values) on arm's centerline."""
        spec = self.mesh.spec
        d = spec.directions()[arm]
        horizontal = d[0] != 0
        coords = self.mesh.node_xy
        on_line = np.abs(coords[:, 1 if horizontal else 0]) < 1e-13
        box = _arm_box(spec, arm)
        lo, hi = (box[0], box[1]) if horizontal else (box[2], box[3])
        axis_vals = coords[:, 0 if horizontal else 1]
        sel = on_line & (axis_vals > lo - 1e-13) & (axis_vals < hi + 1e-13)
        ids = np.flatnonzero(sel)
        s = axis_vals[ids] * (1.0 if (d[0] + d[1]) > 0 else -1.0)
        order = np.argsort(s)
        return s[order], self.u[ids[order]]

    def energy(self) -> float:
        """Discrete Dirichlet energy int kappa |grad u|^2."""
        hxc, hyc = self.mesh.cell_boxes[:, 2], self.mesh.cell_boxes[:, 3]
        ue = self.u[self.mesh.cells]
        Kx = np.einsum("c,ij,cj->ci", self.kappa_cells * hyc / hxc, _Q1_KXX, ue)
        Ky = np.einsum("c,ij,cj->ci", self.kappa_cells * hxc / hyc, _Q1_KYY, ue)
        return float(np.sum(ue * (Kx + Ky)))


def solve_thin(spec: ThinDomainSpec, h_rule=None, mesh: ThinMesh = None,
               dirichlet_override=None) -> ThinSolution:
    """Assemble and solve the bilinear FEM problem on the thin domain.

    The hull carries the source density g / (eps |omega|); far-end Dirichlet
    values are imposed strongly on the end-face mesh nodes.

    dirichlet_override(points) -> values (nan = leave alone) pins additional
    domain-boundary nodes; a test-harness extension beyond the model problem's
    single Dirichlet face, used for patch tests.
    """
    mesh = mesh or build_thin_mesh(spec, h_rule)
    n = mesh.n_nodes
    cells, boxes = mesh.cells, mesh.cell_boxes
    hxc, hyc = boxes[:, 2], boxes[:, 3]

    arm_kappa = np.asarray(spec.kappa_arms)
    kap = np.where(mesh.cell_region < 0, spec.kappa_node,
                   arm_kappa[np.maximum(mesh.cell_region, 0)])
    ke = (kap * hyc / hxc)[:, None, None] * _Q1_KXX \
        + (kap * hxc / hyc)[:, None, None] * _Q1_KYY

    rows = np.repeat(cells, 4, axis=1).ravel()
    cols = np.tile(cells, (1, 4)).ravel()
    A = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    # volume sources: arm data f_i, hull density g / (eps |omega|)
    b = np.zeros(n)
    qpts = boxes[:, None, :2] + _Q1_PTS[None, :, :] * boxes[:, None, 2:]
    fvals = np.zeros((len(cells), 4))
    for reg in range(-1, spec.arms):
        sel = mesh.cell_region == reg
        if not np.any(sel):
            continue
        src = spec.g if reg < 0 else spec.f_arms[reg]
        if callable(src):
            vals = np.asarray(src(qpts[sel].reshape(-1, 2)), dtype=float).reshape(-1, 4)
        elif src:
            vals = np.full((int(np.sum(sel)), 4), float(src))
        else:
            continue
        if reg < 0:
            vals = vals / (spec.eps * spec.omega_area())
        fvals[sel] = vals
    be = np.einsum("q,qi,cq->ci", _Q1_W, _Q1_N, fvals) * (hxc * hyc)[:, None]
    np.add.at(b, cells.ravel(), be.ravel())

    fixed = np.zeros(n, dtype=bool)
    values = np.zeros(n)
    coords = mesh.node_xy
    for i, val in enumerate(spec.far_values):
        if val is None:
            continue
        d = spec.directions()[i]
        box = _arm_box(spec, i)
        if d[0] != 0:
            end = box[1] if d[0] > 0 else box[0]
            sel = (np.abs(coords[:, 0] - end) < 1e-13) \
                & (coords[:, 1] > box[2] - 1e-13) & (coords[:, 1] < box[3] + 1e-13)
        else:
            end = box[3] if d[1] > 0 else box[2]
            sel = (np.abs(coords[:, 1] - end) < 1e-13) \
                & (coords[:, 0] > box[0] - 1e-13) & (coords[:, 0] < box[1] + 1e-13)
        fixed |= sel
        values[sel] = val

    if dirichlet_override is not None:
        counts = np.bincount(cells.ravel(), minlength=n)
        boundary = counts < 4
        vals = np.asarray(dirichlet_override(coords[boundary]), dtype=float)
        ids = np.flatnonzero(boundary)[np.isfinite(vals)]
        fixed[ids] = True
        values[ids] = vals[np.isfinite(vals)]

    free = np.flatnonzero(~fixed)
    if free.size == n:
        raise SolveFailure("no mesh nodes found on the requested Dirichlet far ends")
    try:
        x = spla.spsolve(A[free][:, free].tocsc(),
                         b[free] - A[free][:, fixed] @ values[fixed])
    except Exception as exc:
        raise SolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SolveFailure("thin-domain solve produced non-finite values")
    u = values.copy()
    u[free] = x
    return ThinSolution(mesh=mesh, u=u, kappa_cells=kap, dirichlet=fixed)


# -- the limiting graph problem ----------------------------------------------


def limit_graph_solution(spec: ThinDomainSpec, weighted: bool = True, degree: int = 3):
    """Solve the limiting 1D graph problem with the skeletal solver.

    weighted applies the derived effective data (kappa_i d_i, loads d_i f_i);
    unweighted keeps the raw arm coefficients for comparison studies.
    """
    w = np.asarray(spec.thickness, dtype=float) if weighted else np.ones(spec.arms)
    kappas = w * np.asarray(spec.kappa_arms)
    dirichlet = [v is not None for v in spec.far_values]
    graph = star_graph(spec.arms, lengths=spec.lengths, dirichlet=dirichlet,
                       kappas=kappas)

    def f(pts, edge):
        fa = spec.f_arms[edge.id]
        pts = np.atleast_2d(pts)
        vals = (np.asarray(fa(pts[:, :2]), dtype=float) if callable(fa)
                else np.full(pts.shape[0], float(fa)))
        return w[edge.id] * vals

    def uD(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0])
        for i, val in enumerate(spec.far_values):
            if val is None:
                continue
            end = spec.lengths[i] * spec.directions()[i]
            sel = (np.abs(pts[:, 0] - end[0]) < 1e-12) \
                & (np.abs(pts[:, 1] - end[1]) < 1e-12)
            out[sel] = val
        return out

    def g(pts):
        pts = np.atleast_2d(pts)
        if callable(spec.g):
            return np.asarray(spec.g(pts[:, :2]), dtype=float)
        return np.full(pts.shape[0], float(spec.g))

    has_g = callable(spec.g) or bool(spec.g)
    data = ProblemData(f=f, uD=uD, g=g if has_g else None, f_uniform=False)
    return solve_diffusion(graph, degree, data, tau=1.0, method="direct")


@dataclass
class SweepEntry:
    eps: float
    h: float
    arm: int
    midline_l2: float
    energy_over_eps: float


@dataclass
class SweepReport:
    entries: list = field(default_factory=list)

    def totals(self):
        """Per-eps combined midline discrepancy, in sweep order."""
        order, agg = [], {}
        for e in self.entries:
            if e.eps not in agg:
                agg[e.eps] = 0.0
                order.append(e.eps)
            agg[e.eps] += e.midline_l2**2
        return [(eps, float(np.sqrt(agg[eps]))) for eps in order]

    def energies(self):
        order, seen = [], {}
        for e in self.entries:
            if e.eps not in seen:
                seen[e.eps] = e.energy_over_eps
                order.append(e.eps)
        return [(eps, seen[eps]) for eps in order]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(SWEEP_CSV_HEADER + "\n")
        for e in self.entries:
            buf.write(f"{e.eps:g},{e.h:.6g},{e.arm},{e.midline_l2:.12e},"
                      f"{e.energy_over_eps:.12e}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def midline_discrepancy(thin: ThinSolution, graph_result, arm: int) -> float:
    """L2 distance along arm's centerline between u_eps and the graph field.

    The thin trace is interpolated piecewise linearly, the graph field is the
    reconstructed edge polynomial; 3-point Gauss per midline segment.
    """
    spec = thin.mesh.spec
    s, vals = thin.midline(arm)
    L = spec.lengths[arm]
    gp = np.array([0.5 - 0.5 * np.sqrt(3 / 5), 0.5, 0.5 + 0.5 * np.sqrt(3 / 5)])
    gw = np.array([5 / 18, 8 / 18, 5 / 18])
    total = 0.0
    for a, b in zip(s[:-1], s[1:]):
        pts = a + (b - a) * gp
        thin_vals = np.interp(pts, s, vals)
        graph_vals = graph_result.eval_U(arm, (pts / L).reshape(-1, 1))
        total += (b - a) * float(np.sum(gw * (thin_vals - graph_vals) ** 2))
    return float(np.sqrt(total))


def epsilon_sweep(spec_template: ThinDomainSpec, eps_list, h_rule=None,
                  weighted: bool = True) -> SweepReport:
    """Solve the thin problem for each eps and compare midlines with the limit.

    eps_list must decrease strictly; entries are independent solves reduced in
    list order.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list[:-1], eps_list[1:])):
        raise OverlapError("eps_list must be strictly decreasing")
    graph_result = limit_graph_solution(spec_template, weighted=weighted)
    report = SweepReport()
    for eps in eps_list:
        spec = replace(spec_template, eps=eps)
        thin = solve_thin(spec, h_rule)
        energy_ratio = thin.energy() / eps
        rule = (h_rule or default_h_rule)(eps)
        for arm in range(spec.arms):
            report.entries.append(
                SweepEntry(
                    eps=eps,
                    h=rule["h_cross"],
                    arm=arm,
                    midline_l2=midline_discrepancy(thin, graph_result, arm),
                    energy_over_eps=energy_ratio,
                )
            )
    return report
