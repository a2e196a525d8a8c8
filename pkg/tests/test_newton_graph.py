from __future__ import annotations

import pytest

from conftest import pipeline, roots_of_unity, unity_map
from newtongraph.complex_poly import INF, Polynomial, RootSpec, is_inf, newton_map, newton_map_from_roots
from newtongraph.newton_graph import (
    NotPostcriticallyFixedError,
    build_channel_diagram,
    channel_diagram_level,
    face_pole_census,
    newton_graph_level,
    poles_connect_level,
    pull_back,
    shared_pole_witnesses,
    validate_abstract_channel_diagram,
    validate_abstract_newton_graph,
)
from newtongraph.planar_graph import (
    EdgeRecord,
    EmbeddedGraph,
    GraphMapRecord,
    VertexRecord,
    find_equivalences,
    trace_faces,
)


def star_graph(rot_at_v0, edges):
    n = 1 + max(max(e) for e in edges)
    verts = {0: VertexRecord(0, "infinity", INF)}
    verts.update({i: VertexRecord(i, "root") for i in range(1, n)})
    erecs = {i: EdgeRecord(i, a, b) for i, (a, b) in enumerate(edges)}
    rot = {v: [] for v in verts}
    for i, (a, b) in enumerate(edges):
        if a != 0:
            rot[a].append((i, 0))
        if b != 0 and b != a:
            rot[b].append((i, 1))
    rot[0] = list(rot_at_v0)
    return EmbeddedGraph(verts, erecs, {v: tuple(s) for v, s in rot.items()})


# -- channel diagrams ---------------------------------------------------------


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_channel_diagram_of_z_d_minus_1(d):
    cd = build_channel_diagram(unity_map(d))
    g = cd.graph
    assert len(g.edges) == d
    assert len(trace_faces(g)) == 1
    assert validate_abstract_channel_diagram(g).overall
    assert all(g.degree(v) == 1 for v in g.vertices if v != 0)


def test_channel_diagram_with_a_triple_access():
    f = newton_map_from_roots(RootSpec.simple([-1, 0, 1]))
    g = build_channel_diagram(f).graph
    assert len(g.edges) == 4 == 2 * 3 - 2
    assert len(trace_faces(g)) == 2
    rep = validate_abstract_channel_diagram(g)
    assert rep.overall


def test_channel_validator_examples():
    assert validate_abstract_channel_diagram(star_graph([(0, 1), (1, 1), (2, 1)], [(1, 0), (2, 0), (3, 0)])).overall
    # two parallel v0-v1 edges with nothing between them on one side
    g = star_graph([(0, 1), (1, 1), (2, 1), (3, 1)], [(1, 0), (1, 0), (2, 0), (3, 0)])
    rep = validate_abstract_channel_diagram(g)
    assert not rep.verdicts["4_parallel_edges_separate"]["pass"]
    assert rep.verdicts["1_edge_bound"]["pass"]
    # parallel edges separated by other vertices are fine
    g = star_graph([(0, 1), (2, 1), (1, 1), (3, 1)], [(1, 0), (1, 0), (2, 0), (3, 0)])
    assert validate_abstract_channel_diagram(g).overall
    # an edge between two finite vertices
    g = star_graph([(0, 1), (1, 1), (2, 1)], [(1, 0), (2, 0), (3, 0), (1, 2)])
    rep = validate_abstract_channel_diagram(g)
    assert not rep.verdicts["2_star"]["pass"]


# -- pullback -----------------------------------------------------------------


def test_first_pullback_of_z3_minus_1():
    f = unity_map(3)
    l0 = channel_diagram_level(build_channel_diagram(f), f)
    l1 = pull_back(f, l0)
    g = l1.graph
    assert l1.contains_all_poles
    finite = sorted(
        (v.position for v in g.vertices.values() if not is_inf(v.position)),
        key=lambda z: (round(z.real, 6), round(z.imag, 6)),
    )
    # roots, the pole 0 and the co-roots -w/2 (second preimage of each root w)
    expected = sorted(
        roots_of_unity(3) + [0j] + [-w / 2 for w in roots_of_unity(3)],
        key=lambda z: (round(z.real, 6), round(z.imag, 6)),
    )
    assert len(finite) == len(expected)
    for a, b in zip(finite, expected):
        assert abs(a - b) < 1e-9
    assert len(g.edges) == 9
    kinds = sorted(v.kind for v in g.vertices.values())
    assert kinds.count("pole") == 1 and kinds.count("root-preimage") == 3


def test_pullback_is_monotone_and_maps_edges_to_edges():
    res = pipeline(4)
    for prev, cur in zip(res.levels, res.levels[1:]):
        assert set(prev.graph.vertices) <= set(cur.graph.vertices)
        assert set(prev.graph.edges) <= set(cur.graph.edges)
        for e in cur.graph.edges.values():
            img, rev = cur.map_to_previous.edge_map[e.id]
            assert img in prev.graph.edges
            t = prev.graph.edges[img]
            ends = (t.head, t.tail) if rev else (t.tail, t.head)
            vm = cur.map_to_previous.vertex_map
            assert (vm[e.tail], vm[e.head]) == ends
        for e in prev.graph.edges:
            assert cur.graph.geometry[e] == prev.graph.geometry[e]


@pytest.mark.parametrize("d", [3, 4])
def test_vertex_types_by_forward_iteration(d):
    f = unity_map(d)
    res = pipeline(d)
    roots = roots_of_unity(d)
    for v in res.graph.vertices.values():
        if v.kind in ("infinity", "root"):
            continue
        z = v.position
        hit = None
        for k in range(1, v.level + 1):
            z = f(z)
            if is_inf(z) or abs(z) > 1e6:
                hit = ("inf", k)
                break
            if min(abs(z - r) for r in roots) < 1e-6:
                hit = ("root", k)
                break
        assert hit is not None
        if v.kind == "pole":
            assert hit == ("inf", 1)
        elif v.kind == "prepole":
            assert hit[0] == "inf" and hit[1] > 1
        else:
            assert hit[0] == "root"


@pytest.mark.parametrize("d", [3, 4])
def test_poles_connect_at_level_one(d):
    assert poles_connect_level(unity_map(d)) == 1


# -- the Newton graph ---------------------------------------------------------


@pytest.mark.parametrize("d,vertices,edges", [(3, 20, 27), (4, 50, 64)])
def test_newton_graph_level_two(d, vertices, edges):
    res = pipeline(d)
    assert res.N == 2
    assert len(res.levels) == 3
    assert res.report.overall
    assert len(res.report.verdicts) == 7
    assert (len(res.graph.vertices), len(res.graph.edges)) == (vertices, edges)


def test_extra_pullback_when_critical_points_start_in_the_diagram():
    f = newton_map_from_roots(RootSpec.simple([-1, 0, 1]))
    res = newton_graph_level(f)
    assert res.N == 1
    assert [lv.n for lv in res.levels] == [0, 1]
    assert res.report.overall


def test_refuses_maps_that_are_not_postcritically_fixed():
    f = newton_map(Polynomial((2, -2, 0, 1)))
    with pytest.raises(NotPostcriticallyFixedError) as info:
        newton_graph_level(f)
    assert info.value.undecided


def test_lowered_local_degree_fails_degree_sum():
    res = pipeline(3)
    m = res.map
    pole = next(v for v, rec in res.graph.vertices.items() if rec.kind == "pole")
    bad = GraphMapRecord(m.vertex_map, m.edge_map, {**m.local_degree, pole: 1})
    rep = validate_abstract_newton_graph(res.graph, bad)
    assert not rep.verdicts["3_degree_sum"]["pass"]
    assert not rep.overall


def test_isolated_component_fails_connectivity():
    res = pipeline(3)
    g, m = res.graph, res.map
    a, b = max(g.vertices) + 1, max(g.vertices) + 2
    e = max(g.edges) + 1
    some_edge = next(x for x in g.edges if m.edge_map[x][0] != x)
    img = m.edge_map[some_edge][0]
    verts = {**g.vertices, a: VertexRecord(a, "vertex"), b: VertexRecord(b, "vertex")}
    edges = {**g.edges, e: EdgeRecord(e, a, b)}
    rot = {**g.rotation, a: ((e, 0),), b: ((e, 1),)}
    t = g.edges[img]
    gm = GraphMapRecord(
        {**m.vertex_map, a: t.tail, b: t.head},
        {**m.edge_map, e: (img, False)},
        {**m.local_degree, a: 1, b: 1},
    )
    rep = validate_abstract_newton_graph(EmbeddedGraph(verts, edges, rot), gm)
    assert not rep.verdicts["5_complement_connected"]["pass"]


def test_permuted_roots_give_an_equivalent_graph():
    a = pipeline(3)
    b = pipeline(3, (2, 0, 1))
    assert find_equivalences(a.graph, a.map, b.graph, b.map)


# -- face laws ----------------------------------------------------------------


@pytest.mark.parametrize("roots", [roots_of_unity(3), roots_of_unity(5), [-1, 0, 1], [0, 1, 0.5 + 0.8660254037844386j]])
def test_face_pole_law(roots):
    f = newton_map_from_roots(RootSpec.simple(roots))
    g = build_channel_diagram(f).graph
    for face in face_pole_census(f, g):
        assert face["boundary_fixed_points"] == face["poles"] + 1


def test_triple_access_faces_each_hold_one_pole():
    f = newton_map_from_roots(RootSpec.simple([-1, 0, 1]))
    census = face_pole_census(f, build_channel_diagram(f).graph)
    assert sorted(c["poles"] for c in census) == [1, 1]


@pytest.mark.parametrize("d", [3, 4])
def test_shared_pole_witness_in_every_face(d):
    res = pipeline(d)
    wit = shared_pole_witnesses(unity_map(d), res.levels[0].graph, res.levels[1].graph)
    assert wit and all(w["witnesses"] for w in wit)


def test_shared_pole_witness_for_two_faces():
    f = newton_map_from_roots(RootSpec.simple([-1, 0, 1]))
    l0 = channel_diagram_level(build_channel_diagram(f), f)
    l1 = pull_back(f, l0)
    wit = shared_pole_witnesses(f, l0.graph, l1.graph)
    assert len(wit) == 2 and all(w["witnesses"] for w in wit)
