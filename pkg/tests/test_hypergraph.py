import numpy as np
import pytest

from hyperhdg.errors import (
    BasisMismatch,
    DanglingFace,
    DegreeMismatch,
    Disconnected,
    GeometryMismatch,
)
from hyperhdg.hypergraph import (
    HyperEdge,
    HyperNode,
    IncidenceRecord,
    NodeKind,
    build_hypergraph,
    face_to_node_signed_perm,
    graph_from_dict,
    graph_to_dict,
    jump_residual,
    load_graph,
    save_graph,
)
from hyperhdg.meshes import cube_filling, FillingSpec, path_graph, star_graph


def unit_quad(eid, corner, axes, kappa=1.0):
    return HyperEdge(id=eid, corner=np.asarray(corner, float),
                     axes=np.asarray(axes, float), kappa=kappa)


def point_node(nid, xyz, kind=NodeKind.DIRICHLET):
    return HyperNode(id=nid, corner=np.asarray(xyz, float),
                     axes=np.zeros((0, 3)), kind=kind)


def segment_node(nid, corner, axis, kind):
    return HyperNode(id=nid, corner=np.asarray(corner, float),
                     axes=np.asarray(axis, float).reshape(1, 3), kind=kind)


def test_single_interval_edge():
    g = star_graph(1)
    assert len(g.edges) == 1 and len(g.nodes) == 2
    assert list(g.degrees) == [1, 1]
    assert all(n.kind is NodeKind.DIRICHLET for n in g.nodes)


def three_quads_book():
    """Three unit quads joined along the segment [0,1] e_x (like book pages)."""
    edges = [
        unit_quad(0, [0, 0, 0], [[1, 0, 0], [0, 1, 0]]),
        unit_quad(1, [0, 0, 0], [[1, 0, 0], [0, 0, 1]]),
        unit_quad(2, [0, -1, 0], [[1, 0, 0], [0, 1, 0]]),
    ]
    ex = [1.0, 0.0, 0.0]
    shared = segment_node(0, [0, 0, 0], ex, NodeKind.INTERIOR)
    nodes = [shared]
    incidences = []
    nid = 1
    for eid, e in enumerate(edges):
        for face in range(4):
            fcorner, faxes = e.face_corner_axes(face)
            # the shared segment is face 2 of quads 0, 1 and face 3 of quad 2
            if np.allclose(fcorner, [0, 0, 0]) and np.allclose(faxes[0], ex):
                incidences.append(IncidenceRecord(eid, face, 0, (0,), (0,)))
            else:
                nodes.append(
                    HyperNode(id=nid, corner=fcorner, axes=faxes.copy(),
                              kind=NodeKind.DIRICHLET)
                )
                incidences.append(IncidenceRecord(eid, face, nid, (0,), (0,)))
                nid += 1
    return build_hypergraph(edges, nodes, incidences)


def test_three_quads_sharing_one_node():
    g = three_quads_book()
    assert len(g.edges) == 3
    assert len(g.nodes) == 10          # one interior + 9 boundary
    assert g.degrees[0] == 3
    assert sum(1 for n in g.nodes if n.kind is NodeKind.DIRICHLET) == 9


def test_degree_bookkeeping():
    g = cube_filling(FillingSpec(edge_dim=2, filling=1))
    assert int(np.sum(g.degrees)) == sum(2 * e.dim for e in g.edges)


def test_orientation_reversing_isometry_accepted():
    """Two quads sharing a node whose frame is reversed on one side."""
    e0 = unit_quad(0, [0, 0, 0], [[1, 0, 0], [0, 1, 0]])
    e1 = unit_quad(1, [1, 0, 0], [[1, 0, 0], [0, 1, 0]])
    # shared segment {1} x [0,1] x {0}; node frame runs downward from (1,1,0)
    shared = segment_node(0, [1, 1, 0], [0, -1, 0], NodeKind.INTERIOR)
    nodes = [shared]
    incidences = [
        # e0 face 1 (x0-axis, side 1) runs +y from (1,0,0): flipped vs node
        IncidenceRecord(0, 1, 0, (0,), (1,)),
        # e1 face 0 (x0-axis, side 0) runs +y from (1,0,0): flipped as well
        IncidenceRecord(1, 0, 0, (0,), (1,)),
    ]
    nid = 1
    for eid, e in [(0, e0), (1, e1)]:
        for face in range(4):
            if (eid, face) in [(0, 1), (1, 0)]:
                continue
            fcorner, faxes = e.face_corner_axes(face)
            nodes.append(HyperNode(id=nid, corner=fcorner, axes=faxes.copy(),
                                   kind=NodeKind.DIRICHLET))
            incidences.append(IncidenceRecord(eid, face, nid, (0,), (0,)))
            nid += 1
    g = build_hypergraph([e0, e1], nodes, incidences)
    # composition check at sample points, done again by hand
    rec = g.incidence_of[0][1]
    fpts = np.array([[0.1], [0.5], [0.9]])
    fcorner, faxes = e0.face_corner_axes(1)
    via_face = fcorner + fpts @ faxes
    via_node = g.nodes[0].map_points(rec.apply(fpts))
    assert np.max(np.abs(via_face - via_node)) < 1e-12


def test_wrong_isometry_rejected():
    e0 = unit_quad(0, [0, 0, 0], [[1, 0, 0], [0, 1, 0]])
    e1 = unit_quad(1, [1, 0, 0], [[1, 0, 0], [0, 1, 0]])
    shared = segment_node(0, [1, 1, 0], [0, -1, 0], NodeKind.INTERIOR)
    nodes = [shared]
    incidences = [
        IncidenceRecord(0, 1, 0, (0,), (0,)),   # wrong: no flip
        IncidenceRecord(1, 0, 0, (0,), (1,)),
    ]
    nid = 1
    for eid, e in [(0, e0), (1, e1)]:
        for face in range(4):
            if (eid, face) in [(0, 1), (1, 0)]:
                continue
            fcorner, faxes = e.face_corner_axes(face)
            nodes.append(HyperNode(id=nid, corner=fcorner, axes=faxes.copy(),
                                   kind=NodeKind.DIRICHLET))
            incidences.append(IncidenceRecord(eid, face, nid, (0,), (0,)))
            nid += 1
    with pytest.raises(GeometryMismatch):
        build_hypergraph([e0, e1], nodes, incidences)


def test_dangling_face_rejected():
    e = HyperEdge(id=0, corner=np.zeros(3), axes=np.eye(3)[:1], kappa=1.0)
    nodes = [point_node(0, [0, 0, 0]), point_node(1, [1, 0, 0])]
    incidences = [IncidenceRecord(0, 0, 0)]    # face 1 missing
    with pytest.raises(DanglingFace):
        build_hypergraph([e], nodes, incidences)


def test_unused_node_rejected():
    g = star_graph(1)
    nodes = list(g.nodes) + [point_node(2, [5, 0, 0])]
    with pytest.raises(DanglingFace):
        build_hypergraph(g.edges, nodes, g.incidences)


def test_degree_mismatch_rejected():
    # interior-marked node with degree 1
    e = HyperEdge(id=0, corner=np.zeros(3), axes=np.eye(3)[:1])
    nodes = [point_node(0, [0, 0, 0], NodeKind.INTERIOR),
             point_node(1, [1, 0, 0])]
    incidences = [IncidenceRecord(0, 0, 0), IncidenceRecord(0, 1, 1)]
    with pytest.raises(DegreeMismatch):
        build_hypergraph([e], nodes, incidences)
    # Neumann-marked node with degree 2
    g = path_graph(2)
    nodes = [HyperNode(id=n.id, corner=n.corner, axes=n.axes,
                       kind=NodeKind.NEUMANN if n.id == 1 else n.kind)
             for n in g.nodes]
    with pytest.raises(DegreeMismatch):
        build_hypergraph(g.edges, nodes, g.incidences)


def test_disconnected_rejected():
    edges = [
        HyperEdge(id=0, corner=np.zeros(3), axes=np.eye(3)[:1]),
        HyperEdge(id=1, corner=np.array([5.0, 0, 0]), axes=np.eye(3)[:1]),
    ]
    nodes = [point_node(0, [0, 0, 0]), point_node(1, [1, 0, 0]),
             point_node(2, [5, 0, 0]), point_node(3, [6, 0, 0])]
    incidences = [IncidenceRecord(0, 0, 0), IncidenceRecord(0, 1, 1),
                  IncidenceRecord(1, 0, 2), IncidenceRecord(1, 1, 3)]
    with pytest.raises(Disconnected):
        build_hypergraph(edges, nodes, incidences)


def test_non_orthogonal_axes_rejected():
    e = HyperEdge(id=0, corner=np.zeros(3),
                  axes=np.array([[1.0, 0, 0], [1.0, 1.0, 0]]))
    nodes = [point_node(0, [0, 0, 0])]
    with pytest.raises(GeometryMismatch):
        build_hypergraph([e], nodes, [])


# -- jump residual ------------------------------------------------------------


def test_jump_residual_collinear_conservation():
    g = path_graph(2)
    # constant flux +c along the line: J.n = -c at each left face, +c right
    c = 2.5
    traces = {0: np.array([[-c], [c]]), 1: np.array([[-c], [c]])}
    res = jump_residual(g, traces)
    assert abs(res[1][0]) < 1e-14          # interior node balances
    assert abs(res[0][0] + c) < 1e-14      # boundary nodes carry the trace
    assert abs(res[2][0] - c) < 1e-14


def test_jump_residual_y_junction():
    g = star_graph(3, dirichlet=[True, True, True])
    balanced = {0: np.array([[1.0], [0.0]]),
                1: np.array([[1.0], [0.0]]),
                2: np.array([[-2.0], [0.0]])}
    res = jump_residual(g, balanced)
    assert abs(res[0][0]) < 1e-14
    unbalanced = {0: np.array([[1.0], [0.0]]),
                  1: np.array([[1.0], [0.0]]),
                  2: np.array([[-1.0], [0.0]])}
    res = jump_residual(g, unbalanced)
    assert abs(res[0][0] - 1.0) < 1e-14


def test_jump_residual_linear_and_zero():
    g = star_graph(3)
    rng = np.random.default_rng(7)
    t1 = {e.id: rng.normal(size=(2, 1)) for e in g.edges}
    t2 = {e.id: rng.normal(size=(2, 1)) for e in g.edges}
    a, b = 1.7, -0.4
    combo = {k: a * t1[k] + b * t2[k] for k in t1}
    r1, r2, rc = jump_residual(g, t1), jump_residual(g, t2), jump_residual(g, combo)
    for nid in rc:
        assert np.allclose(rc[nid], a * r1[nid] + b * r2[nid], atol=1e-13)
    zeros = {e.id: np.zeros((2, 1)) for e in g.edges}
    rz = jump_residual(g, zeros)
    assert all(np.all(v == 0) for v in rz.values())


def test_jump_residual_basis_mismatch():
    g = path_graph(2)
    with pytest.raises(BasisMismatch):
        jump_residual(g, {0: np.zeros((3, 1)), 1: np.zeros((2, 1))})
    with pytest.raises(BasisMismatch):
        jump_residual(g, {0: np.zeros((2, 1)), 1: np.zeros((2, 2))})


def test_signed_perm_roundtrip():
    rec = IncidenceRecord(0, 0, 0, perm=(1, 0), flips=(1, 0))
    p = 2
    src, sign = face_to_node_signed_perm(rec, p)
    # applying twice with the inverse code must give the identity
    inv = IncidenceRecord(0, 0, 0, perm=(1, 0), flips=(0, 1))
    src2, sign2 = face_to_node_signed_perm(inv, p)
    n = (p + 1) ** 2
    X = np.zeros((n, n))
    X[np.arange(n), src] = sign
    Y = np.zeros((n, n))
    Y[np.arange(n), src2] = sign2
    assert np.allclose(X @ Y, np.eye(n))
    assert np.allclose(X @ X.T, np.eye(n))  # orthogonal


# -- interchange file ---------------------------------------------------------


def test_interchange_roundtrip(tmp_path):
    g = cube_filling(FillingSpec(edge_dim=2, filling=1))
    d = graph_to_dict(g)
    assert set(d) == {"ambient_dim", "edges", "nodes", "incidences"}
    assert set(d["edges"][0]) == {"corner", "axes", "kappa"}
    assert set(d["nodes"][0]) == {"corner", "axes", "kind"}
    assert set(d["incidences"][0]) == {"edge", "face", "node", "perm", "flips"}
    g2 = graph_from_dict(d)
    assert len(g2.edges) == len(g.edges)
    assert all(np.allclose(a.corner, b.corner) for a, b in zip(g.edges, g2.edges))
    path = tmp_path / "mesh.json"
    save_graph(g, path)
    g3 = load_graph(path)
    assert len(g3.nodes) == len(g.nodes)
    assert [n.kind for n in g3.nodes] == [n.kind for n in g.nodes]
