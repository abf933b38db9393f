"""Global skeletal problem: DOF enumeration, assembly, Dirichlet elimination,
and the sparse SPD solve for the trace unknowns.

Sign convention: the assembled bilinear form is the energy form (sum of the
per-edge condensed operators), which is positive definite on the free DOFs.
A positive nodal source g raises the solution, i.e. the node balance reads
"sum of fluxes out of the node into its edges equals the source".
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import gauss_rule, reference_basis
from .errors import HyperHDGError, NoConvergence, OrientationError
from .hypergraph import HyperGraph, NodeKind, face_to_node_signed_perm


@dataclass
class DofMap:
    """Skeletal DOF numbering: node id major, face-mode minor."""

    n_nodes: int
    dofs_per_node: int
    dirichlet_mask: np.ndarray  # bool (total,)

    @property
    def total(self) -> int:
        return self.n_nodes * self.dofs_per_node

    @property
    def free_index(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(~self.dirichlet_mask))

    def offset(self, node_id: int) -> int:
        return node_id * self.dofs_per_node


@dataclass
class SkeletalSystem:
    """Assembled trace problem, reduced to free DOFs."""

    matrix: sp.csr_matrix          # free x free
    rhs: np.ndarray                # (n_free,)
    dofmap: DofMap
    dirichlet_values: np.ndarray   # full-length trace vector, zero on free DOFs
    matrix_full: sp.csr_matrix = None
    iterations: int = field(default=0)


def enumerate_dofs(graph: HyperGraph, degree: int) -> DofMap:
    """Deterministic numbering in node-id order with the Dirichlet mask filled."""
    dpn = (degree + 1) ** (graph.dim - 1)
    mask = np.zeros(len(graph.nodes) * dpn, dtype=bool)
    for n in graph.nodes:
        if n.kind is NodeKind.DIRICHLET:
            mask[n.id * dpn:(n.id + 1) * dpn] = True
    return DofMap(n_nodes=len(graph.nodes), dofs_per_node=dpn, dirichlet_mask=mask)


def trace_transfer_arrays(graph: HyperGraph, degree: int):
    """Per-edge scatter data between local face layout and global node DOFs.

    Returns (gdof, lslot, sign), each of shape (n_edges, n_trace):
      local face-layout coefficients  c_local[lslot] = sign * trace[gdof]
      functionals scatter back as     out[gdof] += sign * phi_local[lslot].
    Raises OrientationError if any signed permutation fails its round trip.
    """
    d = graph.dim
    nf = (degree + 1) ** (d - 1)
    nt = 2 * d * nf
    dpn = nf
    n_edges = len(graph.edges)
    gdof = np.empty((n_edges, nt), dtype=np.int64)
    lslot = np.empty((n_edges, nt), dtype=np.int64)
    sign = np.empty((n_edges, nt))

    perm_cache = {}
    for rec in graph.incidences:
        key = (rec.perm, rec.flips)
        if key not in perm_cache:
            src, sgn = face_to_node_signed_perm(rec, degree)
            if sorted(src.tolist()) != list(range(nf)):
                raise OrientationError(f"isometry scatter is not a permutation: {rec}")
            perm_cache[key] = (src, sgn)
        src, sgn = perm_cache[key]
        cols = slice(rec.face_index * nf, (rec.face_index + 1) * nf)
        gdof[rec.edge_id, cols] = rec.node_id * dpn + np.arange(nf)
        lslot[rec.edge_id, cols] = rec.face_index * nf + src
        sign[rec.edge_id, cols] = sgn
    return gdof, lslot, sign


def project_node_field(node, degree: int, func) -> np.ndarray:
    """Coefficients of func on the node's reference basis (L2 projection)."""
    d_node = node.dim
    rb = reference_basis(d_node + 1, degree)
    rule = gauss_rule(d_node, degree + 2)
    vals = np.asarray(func(node.map_points(rule.points)), dtype=float).reshape(-1)
    psi = rb.eval_face(rule.points)
    return (psi * rule.weights) @ vals


def assemble_global(graph: HyperGraph, condensed_ops, dofmap: DofMap,
                    g_data=None, uD_data=None, transfer=None,
                    degree: int = None) -> SkeletalSystem:
    """Scatter the per-edge condensed operators and loads into the skeletal system.

    condensed_ops maps edge_id -> CondensedOperator (lift_f already folded in).
    g_data(points) gives the nodal source density on non-Dirichlet nodes;
    uD_data(points) the Dirichlet values.  Dirichlet DOFs are L2-projected and
    eliminated symmetrically into the right-hand side.
    """
    if degree is None:
        any_S = condensed_ops[0].S
        nf = any_S.shape[0] // (2 * graph.dim)
        degree = _degree_from_nface(nf, graph.dim)
    if transfer is None:
        transfer = trace_transfer_arrays(graph, degree)
    gdof, lslot, sign = transfer
    nt = gdof.shape[1]

    # edges sharing a condensed-operator instance are scattered in one batch
    groups = {}
    for e in graph.edges:
        groups.setdefault(id(condensed_ops[e.id].S), []).append(e.id)

    rows, cols, vals = [], [], []
    b = np.zeros(dofmap.total)
    for eids in groups.values():
        eids = np.asarray(eids)
        S = condensed_ops[eids[0]].S
        g, ls, sg = gdof[eids], lslot[eids], sign[eids]
        block = S[ls[:, :, None], ls[:, None, :]] * (sg[:, :, None] * sg[:, None, :])
        rows.append(np.broadcast_to(g[:, :, None], block.shape).ravel())
        cols.append(np.broadcast_to(g[:, None, :], block.shape).ravel())
        vals.append(block.ravel())
        lifts = np.stack(
            [condensed_ops[e].lift_f + condensed_ops[e].lift_uD for e in eids]
        )
        if np.any(lifts):
            np.add.at(b, g, sg * np.take_along_axis(lifts, ls, axis=1))

    A_full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofmap.total, dofmap.total),
    ).tocsr()

    # nodal sources on non-Dirichlet nodes
    if g_data is not None:
        for n in graph.nodes:
            if n.kind is NodeKind.DIRICHLET:
                continue
            coeffs = project_node_field(n, degree, g_data)
            b[dofmap.offset(n.id):dofmap.offset(n.id) + dofmap.dofs_per_node] += (
                n.measure * coeffs
            )

    # Dirichlet values by projection, then symmetric elimination
    lam_dir = np.zeros(dofmap.total)
    if uD_data is not None:
        for n in graph.nodes:
            if n.kind is not NodeKind.DIRICHLET:
                continue
            off = dofmap.offset(n.id)
            lam_dir[off:off + dofmap.dofs_per_node] = project_node_field(
                n, degree, uD_data
            )

    free = dofmap.free_index
    A_free = A_full[free][:, free].tocsr()
    b_free = b[free] - A_full[free] @ lam_dir
    return SkeletalSystem(
        matrix=A_free,
        rhs=b_free,
        dofmap=dofmap,
        dirichlet_values=lam_dir,
        matrix_full=A_full,
    )


def _degree_from_nface(nf: int, d: int) -> int:
    if d == 1:
        return 0
    p = round(nf ** (1.0 / (d - 1))) - 1
    return p


def solve_skeletal(system: SkeletalSystem, method: str = "cg_jacobi",
                   tol: float = 1e-10):
    """Solve for the free trace DOFs; returns the full-length trace vector.

    cg_jacobi: conjugate gradients with point-Jacobi preconditioning,
    relative-residual tolerance tol, iteration cap 10n.  direct: sparse LU.
    """
    A, b = system.matrix, system.rhs
    n = A.shape[0]
    lam = system.dirichlet_values.copy()
    if n == 0:
        system.iterations = 0
        return lam
    if method == "direct":
        x = spla.spsolve(A.tocsc(), b)
        system.iterations = 1
    elif method == "cg_jacobi":
        if not np.any(b):
            x = np.zeros(n)
            system.iterations = 0
        else:
            diag = A.diagonal()
            if np.any(diag <= 0):
                raise NoConvergence("non-positive diagonal entry; assembly bug")
            M = sp.diags(1.0 / diag)
            count = [0]

            def cb(_):
                count[0] += 1

            x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=10 * n, M=M,
                              callback=cb)
            if info != 0:
                raise NoConvergence(
                    f"CG did not reach tol {tol} within {10 * n} iterations"
                )
            system.iterations = count[0]
    else:
        raise HyperHDGError(f"unknown solver method {method!r}")
    lam[system.dofmap.free_index] = x
    return lam


def dump_matrix_market(system: SkeletalSystem, path):
    """Write the reduced matrix (and rhs alongside) in Matrix Market format."""
    from scipy.io import mmwrite

    mmwrite(str(path), system.matrix.tocoo())
    mmwrite(str(path) + ".rhs", system.rhs.reshape(-1, 1))
