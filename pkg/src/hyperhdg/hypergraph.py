"""Geometric hypergraph data model.

A hypergraph is a set of flat d-dimensional hyperedges (axis-parallel boxes
under affine maps of the reference cube) glued along (d-1)-dimensional
hypernodes.  Each (edge, face) pair carries an incidence record whose
isometry -- an axis permutation plus per-axis flips -- maps the face's
intrinsic coordinates onto the node's intrinsic coordinates.

Faces of an edge are numbered f = 2*axis + side, side 0 at local coordinate 0.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .basis import _tensor_indices, gauss_rule
from .errors import (
    BasisMismatch,
    DanglingFace,
    DegreeMismatch,
    Disconnected,
    GeometryMismatch,
)

_GEOM_TOL = 1e-12


class NodeKind(Enum):
    INTERIOR = "interior"
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class HyperEdge:
    """A flat d-dimensional cell: x(t) = corner + sum_a t_a * axes[a], t in [0,1]^d.

    The axes must be pairwise orthogonal with positive length; kappa is the
    (constant) diffusion coefficient on the edge.
    """

    id: int
    corner: np.ndarray           # (D,)
    axes: np.ndarray             # (d, D)
    kappa: float = 1.0

    @property
    def dim(self) -> int:
        return self.axes.shape[0]

    @property
    def face_count(self) -> int:
        return 2 * self.dim

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.axes, axis=1)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    def map_points(self, ref_pts: np.ndarray) -> np.ndarray:
        """Map reference points (n, d) to ambient coordinates (n, D)."""
        return self.corner + np.atleast_2d(ref_pts) @ self.axes

    def face_corner_axes(self, face: int):
        """Affine frame of face f as inherited from the edge parameterization."""
        a, s = face // 2, face % 2
        corner = self.corner + s * self.axes[a]
        keep = [b for b in range(self.dim) if b != a]
        return corner, self.axes[keep]


@dataclass(frozen=True)
class HyperNode:
    """A (d-1)-dimensional joint with its own affine frame and boundary kind."""

    id: int
    corner: np.ndarray           # (D,)
    axes: np.ndarray             # (d-1, D); empty for point nodes
    kind: NodeKind = NodeKind.INTERIOR

    @property
    def dim(self) -> int:
        return self.axes.shape[0]

    @property
    def measure(self) -> float:
        return float(np.prod(np.linalg.norm(self.axes, axis=1))) if self.dim else 1.0

    def map_points(self, ref_pts: np.ndarray) -> np.ndarray:
        ref_pts = np.atleast_2d(ref_pts)
        if self.dim == 0:
            return np.repeat(self.corner[None, :], max(1, ref_pts.shape[0]), axis=0)
        return self.corner + ref_pts @ self.axes


@dataclass(frozen=True)
class IncidenceRecord:
    """Glue between edge face and node: node coord k = flip(face coord perm[k])."""

    edge_id: int
    face_index: int
    node_id: int
    perm: tuple = ()
    flips: tuple = ()

    def apply(self, face_pts: np.ndarray) -> np.ndarray:
        """Map face-intrinsic reference points to node-intrinsic ones."""
        face_pts = np.atleast_2d(face_pts)
        out = np.empty_like(face_pts)
        for k, (src, fl) in enumerate(zip(self.perm, self.flips)):
            out[:, k] = 1.0 - face_pts[:, src] if fl else face_pts[:, src]
        return out


@dataclass
class HyperGraph:
    """Validated, immutable hypergraph: edges, nodes, incidences, lookups.

    Safe for concurrent read; all construction-time validation lives in
    build_hypergraph.
    """

    edges: list
    nodes: list
    incidences: list
    ambient_dim: int
    degrees: np.ndarray = field(default=None)
    # incidence_of[edge_id][face] -> IncidenceRecord
    incidence_of: list = field(default=None)
    # node_incidences[node_id] -> list of IncidenceRecord
    node_incidences: list = field(default=None)

    @property
    def dim(self) -> int:
        return self.edges[0].dim

    def dirichlet_node_ids(self):
        return [n.id for n in self.nodes if n.kind is NodeKind.DIRICHLET]


def _check_edge_geometry(edges):
    axes = np.stack([e.axes for e in edges])                  # (nE, d, D)
    lengths = np.linalg.norm(axes, axis=2)
    if np.any(lengths <= 0):
        bad = int(np.argwhere(np.min(lengths, axis=1) <= 0)[0, 0])
        raise GeometryMismatch(f"edge {bad} has a non-positive axis length")
    gram = np.einsum("eaD,ebD->eab", axes, axes)
    d = axes.shape[1]
    off = gram - np.eye(d) * gram
    if np.max(np.abs(off)) > 1e-10 * np.max(gram):
        bad = int(np.argwhere(np.abs(off).max(axis=(1, 2)) > 1e-10 * np.max(gram))[0, 0])
        raise GeometryMismatch(f"edge {bad} axes are not pairwise orthogonal")
    kappas = np.array([e.kappa for e in edges])
    if np.any(kappas <= 0):
        bad = int(np.argwhere(kappas <= 0)[0, 0])
        raise GeometryMismatch(f"edge {bad} needs kappa > 0, got {edges[bad].kappa}")


def _check_isometries(edges, nodes, incidences):
    """Point-composition check of all incidence isometries in one batch.

    Three Gauss points per axis pin down any affine mismatch exactly.
    """
    d = edges[0].dim
    valid_codes = set()
    for rec in incidences:
        code = (rec.perm, rec.flips)
        if code in valid_codes:
            continue
        if sorted(rec.perm) != list(range(d - 1)) \
                or any(f not in (0, 1) for f in rec.flips):
            raise GeometryMismatch(
                f"incidence ({rec.edge_id}, face {rec.face_index}): invalid isometry code"
            )
        valid_codes.add(code)
    eid = np.array([r.edge_id for r in incidences])
    nid = np.array([r.node_id for r in incidences])
    face = np.array([r.face_index for r in incidences])
    ecorner = np.stack([e.corner for e in edges])
    eaxes = np.stack([e.axes for e in edges])
    ncorner = np.stack([n.corner for n in nodes])

    fcorner = ecorner[eid] + (face % 2)[:, None] * eaxes[eid, face // 2]
    if d == 1:
        via_face = fcorner[:, None, :]
        via_node = ncorner[nid][:, None, :]
    else:
        keep = np.array([[b for b in range(d) if b != f // 2] for f in range(2 * d)])
        faxes = eaxes[eid[:, None], keep[face]]               # (nI, d-1, D)
        naxes = np.stack([n.axes for n in nodes])[nid]
        perms = np.array([r.perm for r in incidences])
        flips = np.array([r.flips for r in incidences], dtype=bool)
        fpts = gauss_rule(d - 1, 3).points                    # (nq, d-1)
        via_face = fcorner[:, None, :] + np.einsum("qk,ikD->iqD", fpts, faxes)
        gathered = np.transpose(fpts[:, perms], (1, 0, 2))    # (nI, nq, d-1)
        iso_pts = np.where(flips[:, None, :], 1.0 - gathered, gathered)
        via_node = ncorner[nid][:, None, :] + np.einsum("iqk,ikD->iqD", iso_pts, naxes)
    err = np.max(np.abs(via_face - via_node), axis=(1, 2))
    tol = _GEOM_TOL * max(1.0, float(np.max(np.abs(via_face))))
    if np.any(err > tol):
        bad = incidences[int(np.argmax(err))]
        raise GeometryMismatch(
            f"incidence ({bad.edge_id}, face {bad.face_index}, node {bad.node_id}): "
            "face and node parameterizations disagree"
        )


def build_hypergraph(edges, nodes, incidences) -> HyperGraph:
    """Validate and assemble a HyperGraph.

    Checks id density, per-face incidence completeness, isometry validity and
    point-composition, node-degree consistency with the node kind, and
    connectivity of the edge-node structure.
    """
    edges = list(edges)
    nodes = list(nodes)
    incidences = sorted(incidences, key=lambda r: (r.edge_id, r.face_index))
    if [e.id for e in edges] != list(range(len(edges))):
        raise GeometryMismatch("edge ids must be dense from 0 in order")
    if [n.id for n in nodes] != list(range(len(nodes))):
        raise GeometryMismatch("node ids must be dense from 0 in order")
    if not edges:
        raise GeometryMismatch("hypergraph needs at least one edge")
    ambient = edges[0].corner.size

    _check_edge_geometry(edges)

    incidence_of = [[None] * e.face_count for e in edges]
    node_incidences = [[] for _ in nodes]
    for rec in incidences:
        if rec.edge_id >= len(edges) or rec.node_id >= len(nodes):
            raise DanglingFace(f"incidence references unknown edge/node: {rec}")
        if rec.face_index >= edges[rec.edge_id].face_count:
            raise DanglingFace(f"incidence face index out of range: {rec}")
        if incidence_of[rec.edge_id][rec.face_index] is not None:
            raise DanglingFace(
                f"edge {rec.edge_id} face {rec.face_index} has two incidence records"
            )
        incidence_of[rec.edge_id][rec.face_index] = rec
        node_incidences[rec.node_id].append(rec)

    for e in edges:
        for f in range(e.face_count):
            if incidence_of[e.id][f] is None:
                raise DanglingFace(f"edge {e.id} face {f} has no node")

    degrees = np.bincount(
        np.array([r.node_id for r in incidences]), minlength=len(nodes)
    )
    for n in nodes:
        if degrees[n.id] == 0:
            raise DanglingFace(f"node {n.id} appears in no incidence record")
        if n.kind is NodeKind.NEUMANN and degrees[n.id] != 1:
            raise DegreeMismatch(
                f"Neumann boundary node {n.id} has degree {degrees[n.id]} != 1"
            )
        if n.kind is NodeKind.INTERIOR and degrees[n.id] < 2:
            raise DegreeMismatch(f"interior node {n.id} has degree {degrees[n.id]} < 2")

    _check_isometries(edges, nodes, incidences)

    # connectivity of the edge-node bipartite structure
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    n_e, n_n = len(edges), len(nodes)
    rows = np.array([r.edge_id for r in incidences])
    cols = np.array([n_e + r.node_id for r in incidences])
    adj = coo_matrix(
        (np.ones(len(incidences)), (rows, cols)), shape=(n_e + n_n, n_e + n_n)
    )
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise Disconnected("hypergraph is not connected")

    return HyperGraph(
        edges=edges,
        nodes=nodes,
        incidences=incidences,
        ambient_dim=ambient,
        degrees=degrees,
        incidence_of=incidence_of,
        node_incidences=node_incidences,
    )


# -- trace transport between face and node bases ------------------------------


def face_to_node_signed_perm(rec: IncidenceRecord, degree: int):
    """Signed permutation carrying face-basis coefficients to node-basis ones.

    For tensor Legendre bases the pullback along (perm, flips) is a signed
    permutation: node multi-index m picks up face multi-index mu with
    mu[perm[k]] = m[k] and sign prod_k (-1)^(m[k]*flips[k]).

    Returns (src, sign): node coefficient m = sign[m] * face coefficient src[m].
    """
    d_minus = len(rec.perm)
    node_idx = _tensor_indices(d_minus, degree)
    n_face = node_idx.shape[0]
    # face multi-index tuple -> flat position (C-order over axes)
    strides = np.array([(degree + 1) ** (d_minus - 1 - a) for a in range(d_minus)])
    src = np.empty(n_face, dtype=int)
    sign = np.ones(n_face)
    for m_flat, m in enumerate(node_idx):
        mu = np.empty(d_minus, dtype=int)
        s = 1.0
        for k in range(d_minus):
            mu[rec.perm[k]] = m[k]
            if rec.flips[k] and (m[k] % 2 == 1):
                s = -s
        src[m_flat] = int(mu @ strides) if d_minus else 0
        sign[m_flat] = s
    return src, sign


def jump_residual(graph: HyperGraph, flux_traces) -> dict:
    """Sum per-edge normal-flux traces into each node's polynomial basis.

    flux_traces maps edge_id -> array (2*d, n_face) of face-basis coefficients
    of J . n on each face.  Returns node_id -> (n_face,) coefficients of the
    accumulated jump in the node basis; for degree-1 (boundary) nodes this is
    the single edge's trace.
    """
    d = graph.dim
    n_face = None
    for e in graph.edges:
        tr = np.asarray(flux_traces[e.id], dtype=float)
        if tr.shape[0] != 2 * d:
            raise BasisMismatch(
                f"edge {e.id}: expected {2 * d} face rows, got {tr.shape[0]}"
            )
        if n_face is None:
            n_face = tr.shape[1]
            degree = round(n_face ** (1.0 / max(1, d - 1))) - 1 if d > 1 else 0
            if d > 1 and (degree + 1) ** (d - 1) != n_face:
                raise BasisMismatch(f"{n_face} is not a tensor-space dimension")
        elif tr.shape[1] != n_face:
            raise BasisMismatch(f"edge {e.id}: inconsistent trace length {tr.shape[1]}")

    out = {n.id: np.zeros(n_face) for n in graph.nodes}
    for rec in graph.incidences:
        tr = np.asarray(flux_traces[rec.edge_id], dtype=float)[rec.face_index]
        if d == 1:
            out[rec.node_id] += tr
        else:
            src, sign = face_to_node_signed_perm(rec, degree)
            out[rec.node_id] += sign * tr[src]
    return out


# -- interchange file ---------------------------------------------------------


def graph_to_dict(graph: HyperGraph) -> dict:
    return {
        "ambient_dim": graph.ambient_dim,
        "edges": [
            {"corner": e.corner.tolist(), "axes": e.axes.tolist(), "kappa": e.kappa}
            for e in graph.edges
        ],
        "nodes": [
            {"corner": n.corner.tolist(), "axes": n.axes.tolist(), "kind": n.kind.value}
            for n in graph.nodes
        ],
        "incidences": [
            {
                "edge": r.edge_id,
                "face": r.face_index,
                "node": r.node_id,
                "perm": list(r.perm),
                "flips": list(r.flips),
            }
            for r in graph.incidences
        ],
    }


def graph_from_dict(data: dict) -> HyperGraph:
    edges = [
        HyperEdge(
            id=i,
            corner=np.asarray(e["corner"], dtype=float),
            axes=np.asarray(e["axes"], dtype=float),
            kappa=float(e.get("kappa", 1.0)),
        )
        for i, e in enumerate(data["edges"])
    ]
    nodes = [
        HyperNode(
            id=i,
            corner=np.asarray(n["corner"], dtype=float),
            axes=np.asarray(n["axes"], dtype=float).reshape(-1, len(n["corner"])),
            kind=NodeKind(n["kind"]),
        )
        for i, n in enumerate(data["nodes"])
    ]
    incidences = [
        IncidenceRecord(
            edge_id=r["edge"],
            face_index=r["face"],
            node_id=r["node"],
            perm=tuple(r["perm"]),
            flips=tuple(r["flips"]),
        )
        for r in data["incidences"]
    ]
    return build_hypergraph(edges, nodes, incidences)


def save_graph(graph: HyperGraph, path):
    with open(path, "w") as fh:
        json.dump(graph_to_dict(graph), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_graph(path) -> HyperGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))
