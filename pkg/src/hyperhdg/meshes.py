"""Hypergraph factories.

cube_filling builds the d-dimensional skeleton of the unit cube refined i
times, with every d-face split r further times; nodes whose closure lies in
the cube boundary are marked Dirichlet.  star_graph and path_graph provide
small 1D graphs for closed-form oracle tests.

All facet identification uses exact integer (dyadic) corner coordinates at
resolution 2^(i+r), so deduplication is exact and output deterministic.
"""

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import GuardExceeded
from .hypergraph import (
    HyperEdge,
    HyperGraph,
    HyperNode,
    IncidenceRecord,
    NodeKind,
    build_hypergraph,
)

AMBIENT_DIM = 3


@dataclass(frozen=True)
class FillingSpec:
    """Parameters of the cube-skeleton meshes: edge dimension d, filling i,
    per-facet refinement r."""

    edge_dim: int
    filling: int
    refinement: int = 0
    kappa: float = 1.0
    max_filling: int = 6
    max_refinement: int = 4

    def validate(self):
        if self.edge_dim not in (1, 2, 3):
            raise GuardExceeded(f"edge dimension must be 1, 2 or 3, got {self.edge_dim}")
        if not 0 <= self.filling <= self.max_filling:
            raise GuardExceeded(
                f"filling {self.filling} outside guard [0, {self.max_filling}]"
            )
        if not 0 <= self.refinement <= self.max_refinement:
            raise GuardExceeded(
                f"refinement {self.refinement} outside guard [0, {self.max_refinement}]"
            )


def cube_filling(spec: FillingSpec) -> HyperGraph:
    """All d-faces of the (2^i)^3 grid, each split into (2^r)^d sub-cells.

    Hyperedges are the unit d-cubes of the fine 2^(i+r) grid whose fixed
    coordinates are multiples of 2^r; hypernodes are their (d-1)-faces,
    deduplicated by integer corner coordinates.
    """
    spec.validate()
    d = spec.edge_dim
    n_fine = 2 ** (spec.filling + spec.refinement)
    m = 2**spec.refinement
    h = 1.0 / n_fine

    # enumerate hyperedges: (spanned axes, integer corner)
    edge_keys = []
    for axes in combinations(range(AMBIENT_DIM), d):
        fixed = [a for a in range(AMBIENT_DIM) if a not in axes]
        spans = [range(n_fine) if a in axes else range(0, n_fine + 1, m)
                 for a in range(AMBIENT_DIM)]
        for corner in product(*spans):
            edge_keys.append((axes, corner))

    # collect node keys: ((spanned axes), corner) of each face of each edge
    node_key_set = set()
    for axes, corner in edge_keys:
        for a in axes:
            rest = tuple(b for b in axes if b != a)
            for side in (0, 1):
                c = list(corner)
                c[a] += side
                node_key_set.add((rest, tuple(c)))
    node_keys = sorted(node_key_set)
    node_index = {k: i for i, k in enumerate(node_keys)}

    edges = [
        HyperEdge(
            id=i,
            corner=np.array(corner, dtype=float) * h,
            axes=np.array([np.eye(AMBIENT_DIM)[a] * h for a in axes]),
            kappa=spec.kappa,
        )
        for i, (axes, corner) in enumerate(edge_keys)
    ]

    nodes = []
    for i, (axes, corner) in enumerate(node_keys):
        fixed = [a for a in range(AMBIENT_DIM) if a not in axes]
        on_boundary = any(corner[a] in (0, n_fine) for a in fixed)
        nodes.append(
            HyperNode(
                id=i,
                corner=np.array(corner, dtype=float) * h,
                axes=np.array([np.eye(AMBIENT_DIM)[a] * h for a in axes]).reshape(
                    d - 1, AMBIENT_DIM
                ),
                kind=NodeKind.DIRICHLET if on_boundary else NodeKind.INTERIOR,
            )
        )

    # canonical frames on both sides make every isometry the identity
    identity = (tuple(range(d - 1)), (0,) * (d - 1))
    incidences = []
    for eid, (axes, corner) in enumerate(edge_keys):
        for local_a, a in enumerate(axes):
            rest = tuple(b for b in axes if b != a)
            for side in (0, 1):
                c = list(corner)
                c[a] += side
                incidences.append(
                    IncidenceRecord(
                        edge_id=eid,
                        face_index=2 * local_a + side,
                        node_id=node_index[(rest, tuple(c))],
                        perm=identity[0],
                        flips=identity[1],
                    )
                )

    return build_hypergraph(edges, nodes, incidences)


_STAR_DIRECTIONS = np.array(
    [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)


def star_graph(m: int, lengths=None, dirichlet=None, kappas=None) -> HyperGraph:
    """m interval edges joined at one center node (axis-aligned directions).

    dirichlet[i] marks arm i's outer endpoint as Dirichlet; non-marked outer
    endpoints are Neumann boundary nodes.  Edge i runs from the center to
    lengths[i] * direction[i]; the center face of every edge is face 0.
    """
    if not 1 <= m <= len(_STAR_DIRECTIONS):
        raise GuardExceeded(f"star_graph supports 1 <= m <= 6 arms, got {m}")
    lengths = np.ones(m) if lengths is None else np.asarray(lengths, dtype=float)
    kappas = np.ones(m) if kappas is None else np.asarray(kappas, dtype=float)
    dirichlet = [True] * m if dirichlet is None else list(dirichlet)

    center = np.zeros(AMBIENT_DIM)
    edges, nodes, incidences = [], [], []
    center_degree = m if m > 1 else 1
    nodes.append(
        HyperNode(
            id=0,
            corner=center,
            axes=np.zeros((0, AMBIENT_DIM)),
            kind=NodeKind.INTERIOR if center_degree >= 2 else NodeKind.DIRICHLET,
        )
    )
    for i in range(m):
        direction = _STAR_DIRECTIONS[i]
        edges.append(
            HyperEdge(
                id=i,
                corner=center.copy(),
                axes=(lengths[i] * direction)[None, :],
                kappa=float(kappas[i]),
            )
        )
        outer = HyperNode(
            id=i + 1,
            corner=center + lengths[i] * direction,
            axes=np.zeros((0, AMBIENT_DIM)),
            kind=NodeKind.DIRICHLET if dirichlet[i] else NodeKind.NEUMANN,
        )
        nodes.append(outer)
        incidences.append(IncidenceRecord(edge_id=i, face_index=0, node_id=0))
        incidences.append(IncidenceRecord(edge_id=i, face_index=1, node_id=i + 1))
    return build_hypergraph(edges, nodes, incidences)


def path_graph(n_cells: int, length: float = 1.0, kappa: float = 1.0) -> HyperGraph:
    """n_cells collinear interval edges on [0, length]; both ends Dirichlet."""
    if n_cells < 1:
        raise GuardExceeded("path_graph needs at least one cell")
    h = length / n_cells
    ex = np.eye(AMBIENT_DIM)[0]
    edges = [
        HyperEdge(id=i, corner=i * h * ex, axes=(h * ex)[None, :], kappa=kappa)
        for i in range(n_cells)
    ]
    nodes = []
    for j in range(n_cells + 1):
        boundary = j in (0, n_cells)
        nodes.append(
            HyperNode(
                id=j,
                corner=j * h * ex,
                axes=np.zeros((0, AMBIENT_DIM)),
                kind=NodeKind.DIRICHLET if boundary else NodeKind.INTERIOR,
            )
        )
    incidences = []
    for i in range(n_cells):
        incidences.append(IncidenceRecord(edge_id=i, face_index=0, node_id=i))
        incidences.append(IncidenceRecord(edge_id=i, face_index=1, node_id=i + 1))
    return build_hypergraph(edges, nodes, incidences)
