"""Channel diagrams, their iterated pullbacks, and the abstract Newton graph axioms."""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .complex_poly import INF, RationalMap, chordal, is_inf, poles_of, roots_with_multiplicity
from .dynamics import (
    DEFAULT_OPTIONS,
    Options,
    critical_points,
    distance_to_polyline,
    is_postcritically_fixed,
    lift_curve,
    local_degree_at,
    trace_internal_ray,
)
from .errors import NewtonGraphError, NumericalError, PullbackError, TracingError
from .planar_graph import (
    EdgeRecord,
    EmbeddedGraph,
    GraphMapRecord,
    VertexRecord,
    check_regular_extension,
    trace_faces,
    rotation_from_geometry,
)

MERGE_TOL = 1e-7
VERTEX_MATCH_TOL = 1e-6


class NotPostcriticallyFixedError(NewtonGraphError):
    def __init__(self, message, undecided=()):
        super().__init__(message)
        self.undecided = list(undecided)


class NonTerminationError(NewtonGraphError):
    pass


class LevelMismatchError(NewtonGraphError):
    pass


@dataclass(frozen=True)
class ChannelDiagram:
    graph: EmbeddedGraph
    rays: tuple
    degree: int
    local_degree: dict
    flags: tuple = ()


@dataclass(frozen=True)
class NewtonGraphLevel:
    n: int
    graph: EmbeddedGraph
    map_to_previous: GraphMapRecord
    contains_all_poles: bool
    contains_all_critical_points: bool
    flags: tuple = ()


@dataclass
class ValidationReport:
    verdicts: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(v["pass"] for v in self.verdicts.values())

    def record(self, name: str, ok: bool, evidence) -> None:
        self.verdicts[name] = {"pass": bool(ok), "evidence": evidence}

    def to_json(self) -> dict:
        return {"overall": self.overall, "conditions": self.verdicts}


# ---------------------------------------------------------------------------
# Channel diagram


def build_channel_diagram(f: RationalMap, opts: Options = DEFAULT_OPTIONS) -> ChannelDiagram:
    """One edge per fixed internal ray; vertex 0 is infinity, vertex i is root i-1."""
    if not f.roots:
        raise TracingError("map carries no root data; build it with newton_map")
    vertices = {0: VertexRecord(0, "infinity", INF, 0)}
    local_degree = {0: 1}
    edges = {}
    geometry = {}
    rays = []
    for i, (xi, m) in enumerate(f.roots):
        vid = i + 1
        vertices[vid] = VertexRecord(vid, "root", complex(xi), 0)
        k, _ = local_degree_at(f, xi)
        local_degree[vid] = k
        for j in range(1, k):
            try:
                ray = trace_internal_ray(f, i, j, opts)
            except NumericalError as exc:
                raise TracingError(f"partial channel diagram: ray {j} of root {xi} failed: {exc}") from exc
            eid = len(edges)
            edges[eid] = EdgeRecord(eid, vid, 0, 0)
            geometry[eid] = ray.points
            rays.append(ray)
    rotation, flags = rotation_from_geometry(vertices, edges, geometry, opts.escape_radius / 10)
    g = EmbeddedGraph(vertices, edges, rotation, geometry)
    return ChannelDiagram(g, tuple(rays), len(f.roots), local_degree, tuple(flags))


def channel_diagram_level(diagram: ChannelDiagram, f: RationalMap) -> NewtonGraphLevel:
    g = diagram.graph
    m = GraphMapRecord(
        {v: v for v in g.vertices},
        {e: (e, False) for e in g.edges},
        dict(diagram.local_degree),
    )
    return NewtonGraphLevel(
        0, g, m, _contains_all_poles(f, g), _contains_all_critical(f, g), diagram.flags
    )


# ---------------------------------------------------------------------------
# Pullback


def _preimages(f: RationalMap, pos) -> list:
    """Preimages of a sphere point as ``(position, local degree)``."""
    out = [(complex(z), k) for z, k in roots_with_multiplicity(f.preimage_poly(pos))] if f.preimage_poly(pos).degree > 0 else []
    if is_inf(pos) and f.num.degree > f.den.degree:
        out.append((INF, f.num.degree - f.den.degree))
    return out


def _refine_end(pts: list) -> list:
    """Insert geometrically spaced samples approaching the first point."""
    if len(pts) < 2:
        return pts
    v, nxt = pts[0], pts[1]
    span = abs(nxt - v)
    floor = 1e-9 * (1.0 + abs(v))
    extra = []
    t = 0.5
    while span * t > floor:
        extra.append(v + (nxt - v) * t)
        t *= 0.5
    return [v] + extra[::-1] + pts[1:]


def _snap(w: complex, candidates: list, edge_id: int, which: str) -> int:
    if not candidates:
        raise PullbackError(f"edge {edge_id}: no preimage candidates for the {which} end")
    dists = sorted((chordal(w, pos), i) for i, (pos, _) in enumerate(candidates))
    d1, i1 = dists[0]
    if len(dists) > 1:
        d2 = dists[1][0]
        if d1 > 0.25 * d2 or d1 > 0.05:
            raise PullbackError(
                f"edge {edge_id}: lifted {which} end {w} does not land unambiguously (d1={d1:.3g}, d2={d2:.3g})"
            )
    elif d1 > 0.05:
        raise PullbackError(f"edge {edge_id}: lifted {which} end {w} far from every preimage")
    return i1


def lift_edge(f: RationalMap, pts, tail_pos, head_pos, tail_pre: list, head_pre: list, edge_id: int = -1) -> list:
    """All ``d`` lifts of one edge polyline.

    Returns ``(anchor, polyline, tail preimage index, head preimage index)`` per
    branch, ordered by the anchor point (the preimage of the edge's middle sample).
    """
    pts = list(pts)
    if not is_inf(tail_pos):
        pts = _refine_end(pts)
    if not is_inf(head_pos):
        pts = _refine_end(pts[::-1])[::-1]
    n = len(pts)
    anchors = None
    for offset in range(0, n // 2):
        for mid in (n // 2 + offset, n // 2 - offset):
            if not 0 < mid < n - 1:
                continue
            c = pts[mid]
            sols = roots_with_multiplicity(f.preimage_poly(c))
            if len(sols) == f.degree and all(k == 1 for _, k in sols):
                anchors = (mid, [z for z, _ in sols])
                break
        if anchors:
            break
    if anchors is None:
        raise PullbackError(f"edge {edge_id}: no regular sample to anchor the lift")
    mid, ws = anchors
    fwd_src = pts[mid:] if is_inf(head_pos) else pts[mid:-1]
    back_src = pts[mid::-1] if is_inf(tail_pos) else pts[mid:0:-1]
    out = []
    for w in sorted(ws, key=lambda z: (round(z.real, 10), round(z.imag, 10))):
        try:
            fwd = lift_curve(f, fwd_src, w)
            back = lift_curve(f, back_src, w)
        except NumericalError as exc:
            raise PullbackError(f"edge {edge_id}: lifting failed: {exc}") from exc
        ti = _snap(back[-1], tail_pre, edge_id, "tail")
        hi = _snap(fwd[-1], head_pre, edge_id, "head")
        poly = back[::-1] + fwd[1:]
        tpos, hpos = tail_pre[ti][0], head_pre[hi][0]
        if not is_inf(tpos):
            poly = [tpos] + poly
        if not is_inf(hpos):
            poly = poly + [hpos]
        out.append((w, tuple(poly), ti, hi))
    return out


def _kind_for_preimage(parent_kind: str) -> str:
    if parent_kind == "infinity":
        return "pole"
    if parent_kind in ("pole", "prepole"):
        return "prepole"
    return "root-preimage"


def pull_back(f: RationalMap, level: NewtonGraphLevel, opts: Options = DEFAULT_OPTIONS) -> NewtonGraphLevel:
    """Level ``n+1``: the component of ``f^{-1}`` of the level-``n`` graph containing infinity."""
    g, m = level.graph, level.map_to_previous
    n1 = level.n + 1
    pre = {vid: _preimages(f, v.position) for vid, v in g.vertices.items()}

    # lifts of every edge, each branch separately
    lifts = []
    for eid in sorted(g.edges):
        e = g.edges[eid]
        tpos, hpos = g.vertices[e.tail].position, g.vertices[e.head].position
        for branch, (w, poly, ti, hi) in enumerate(
            lift_edge(f, g.geometry[eid], tpos, hpos, pre[e.tail], pre[e.head], eid)
        ):
            lifts.append({"image": eid, "branch": branch, "poly": poly, "tail": (e.tail, ti), "head": (e.head, hi)})

    # identify preimage points with existing vertices
    key_to_vid = {}
    for parent, cands in pre.items():
        for idx, (pos, _) in enumerate(cands):
            for vid, v in g.vertices.items():
                if m.vertex_map[vid] != parent:
                    continue
                same = (is_inf(pos) and is_inf(v.position)) or (
                    not is_inf(pos) and not is_inf(v.position)
                    and abs(pos - v.position) <= MERGE_TOL * max(1.0, abs(pos))
                )
                if same:
                    key_to_vid[(parent, idx)] = vid
                    break

    # match existing edges to their lifts
    used = set()
    matched = {}
    for eid in sorted(g.edges):
        e = g.edges[eid]
        img, rev = m.edge_map[eid]
        want = (e.head, e.tail) if rev else (e.tail, e.head)
        probe = g.geometry[eid][len(g.geometry[eid]) // 2]
        best = None
        for li, lf in enumerate(lifts):
            if li in used or lf["image"] != img:
                continue
            if (key_to_vid.get(lf["tail"]), key_to_vid.get(lf["head"])) != want:
                continue
            dist = distance_to_polyline(probe, lf["poly"])
            if best is None or dist < best[0]:
                best = (dist, li)
        if best is None or best[0] > VERTEX_MATCH_TOL * max(1.0, abs(probe)):
            raise PullbackError(f"edge {eid} of level {level.n} is not among the lifts of its image edge {img}")
        used.add(best[1])
        matched[best[1]] = eid

    # component containing infinity
    def node(key):
        return ("v", key_to_vid[key]) if key in key_to_vid else ("p", key)

    adj = {}
    for li, lf in enumerate(lifts):
        a, b = node(lf["tail"]), node(lf["head"])
        adj.setdefault(a, []).append((li, b))
        adj.setdefault(b, []).append((li, a))
    inf_vid = g.infinity_vertex()
    start = ("v", inf_vid)
    seen = {start}
    queue = deque([start])
    comp_edges = set()
    while queue:
        x = queue.popleft()
        for li, y in adj.get(x, ()):
            comp_edges.add(li)
            if y not in seen:
                seen.add(y)
                queue.append(y)

    vertices = dict(g.vertices)
    vertex_map = dict(m.vertex_map)
    local_degree = dict(m.local_degree)
    next_vid = max(vertices) + 1
    new_nodes = sorted(k for t, k in seen if t == "p")
    for parent, idx in new_nodes:
        pos, k = pre[parent][idx]
        kind = _kind_for_preimage(g.vertices[parent].kind)
        vertices[next_vid] = VertexRecord(next_vid, kind, pos, n1)
        vertex_map[next_vid] = parent
        local_degree[next_vid] = k
        key_to_vid[(parent, idx)] = next_vid
        next_vid += 1
    for (parent, idx), vid in key_to_vid.items():
        if vid in g.vertices and local_degree.get(vid) is None:
            local_degree[vid] = pre[parent][idx][1]

    edges = dict(g.edges)
    geometry = dict(g.geometry)
    edge_map = dict(m.edge_map)
    next_eid = max(edges) + 1 if edges else 0
    for li in sorted(comp_edges, key=lambda i: (lifts[i]["image"], lifts[i]["branch"])):
        if li in matched:
            continue
        lf = lifts[li]
        eid = next_eid
        next_eid += 1
        edges[eid] = EdgeRecord(eid, key_to_vid[lf["tail"]], key_to_vid[lf["head"]], n1)
        geometry[eid] = lf["poly"]
        edge_map[eid] = (lf["image"], False)

    rotation, flags = rotation_from_geometry(vertices, edges, geometry, opts.escape_radius / 10)
    graph = EmbeddedGraph(vertices, edges, rotation, geometry)
    gm = GraphMapRecord(vertex_map, edge_map, local_degree)
    return NewtonGraphLevel(
        n1, graph, gm, _contains_all_poles(f, graph), _contains_all_critical(f, graph), tuple(flags)
    )


def _has_vertex_at(g: EmbeddedGraph, z: complex) -> bool:
    for v in g.vertices.values():
        if not is_inf(v.position) and v.position is not None:
            if abs(v.position - z) <= VERTEX_MATCH_TOL * max(1.0, abs(z)):
                return True
    return False


def _contains_all_poles(f: RationalMap, g: EmbeddedGraph) -> bool:
    return all(_has_vertex_at(g, p) for p, _ in poles_of(f))


def _contains_all_critical(f: RationalMap, g: EmbeddedGraph) -> bool:
    for c in critical_points(f, cutoff=0):
        if is_inf(c.location):
            if g.infinity_vertex() is None:
                return False
        elif not _has_vertex_at(g, c.location):
            return False
    return True


def poles_connect_level(f: RationalMap, max_n: int = 20, opts: Options = DEFAULT_OPTIONS, levels=None) -> int:
    """Smallest ``n`` such that every finite pole is a vertex of the level-``n`` graph."""
    levels = list(levels) if levels else [channel_diagram_level(build_channel_diagram(f, opts), f)]
    n = 0
    while True:
        if n >= len(levels):
            levels.append(pull_back(f, levels[-1], opts))
        if levels[n].contains_all_poles:
            return n
        if n >= max_n:
            raise NonTerminationError(f"poles not all reached by level {max_n}")
        n += 1


@dataclass
class NewtonGraphResult:
    N: int
    levels: list
    report: ValidationReport

    @property
    def graph(self) -> EmbeddedGraph:
        return self.levels[-1].graph

    @property
    def map(self) -> GraphMapRecord:
        return self.levels[-1].map_to_previous


def newton_graph_level(
    f: RationalMap, max_n: int = 20, opts: Options = DEFAULT_OPTIONS, cutoff: int = 50
) -> NewtonGraphResult:
    """Pull back until all critical points are vertices of level ``N-1``; return levels ``0..N``."""
    pcf = is_postcritically_fixed(f, cutoff, opts)
    if not pcf.is_pcf:
        undecided = [z for z, s in pcf.landing_steps if s is None]
        raise NotPostcriticallyFixedError("map is not (verifiably) postcritically fixed", undecided)
    levels = [channel_diagram_level(build_channel_diagram(f, opts), f)]
    while not levels[-1].contains_all_critical_points:
        if levels[-1].n >= max_n:
            raise NonTerminationError(f"critical points not all reached by level {max_n}")
        levels.append(pull_back(f, levels[-1], opts))
    N = levels[-1].n + 1
    levels.append(pull_back(f, levels[-1], opts))
    report = validate_abstract_newton_graph(levels[-1].graph, levels[-1].map_to_previous)
    n_gamma = report.verdicts["4_level"]["evidence"].get("N")
    if n_gamma is not None and n_gamma != N:
        raise LevelMismatchError(f"pipeline level N={N} disagrees with the graph's own N={n_gamma}")
    return NewtonGraphResult(N, levels, report)


# ---------------------------------------------------------------------------
# Abstract channel diagram / abstract Newton graph


def _center_vertex(g: EmbeddedGraph) -> Optional[int]:
    inf = g.infinity_vertex()
    if inf is not None:
        return inf
    common = None
    for e in g.edges.values():
        ends = {e.tail, e.head}
        common = ends if common is None else common & ends
    if common:
        return min(common)
    return None


def validate_abstract_channel_diagram(g: EmbeddedGraph, v0: Optional[int] = None) -> ValidationReport:
    rep = ValidationReport()
    v0 = _center_vertex(g) if v0 is None else v0
    others = sorted(v for v in g.vertices if v != v0)
    d = len(others)
    l = len(g.edges)
    rep.record("1_edge_bound", d >= 3 and l <= 2 * d - 2, {"d": d, "edges": l, "bound": 2 * d - 2})

    bad = [e.id for e in g.edges.values() if v0 not in (e.tail, e.head) or e.tail == e.head]
    rep.record("2_star", not bad, {"offending_edges": bad})

    count = {v: 0 for v in others}
    for e in g.edges.values():
        if v0 in (e.tail, e.head) and e.tail != e.head:
            other = e.head if e.tail == v0 else e.tail
            count[other] = count.get(other, 0) + 1
    lonely = [v for v in others if count.get(v, 0) == 0]
    rep.record("3_connected_to_v0", not lonely, {"unconnected": lonely})

    # each side of a pair of parallel edges must hold a vertex; the side of an
    # edge at v0 is read off the rotation at v0
    empty = []
    seq = [dd for dd in g.rotation.get(v0, ()) if v0 in (g.edges[dd[0]].tail, g.edges[dd[0]].head)]
    far = [g.dart_vertex(g.twin(dd)) for dd in seq]
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if far[i] != far[j] or far[i] == v0:
                continue
            k = far[i]
            inside = {far[t] for t in range(i + 1, j)} - {k}
            outside = {far[t] for t in list(range(j + 1, len(seq))) + list(range(0, i))} - {k}
            if not inside or not outside:
                empty.append([seq[i][0], seq[j][0]])
    rep.record("4_parallel_edges_separate", not empty, {"empty_pairs": empty})
    return rep


def extract_channel_diagram(g: EmbeddedGraph, m: GraphMapRecord):
    """Edges fixed by the map (with orientation) and their endpoints."""
    fixed = [
        e.id for e in g.edges.values()
        if m.edge_map.get(e.id) == (e.id, False)
        and m.vertex_map.get(e.tail) == e.tail and m.vertex_map.get(e.head) == e.head
    ]
    return g.subgraph(fixed)


def validate_abstract_newton_graph(g: EmbeddedGraph, m: GraphMapRecord) -> ValidationReport:
    rep = ValidationReport()
    delta = extract_channel_diagram(g, m)
    v0 = _center_vertex(delta)
    dvs = set(delta.vertices)
    des = set(delta.edges)
    d_gamma = len(dvs) - 1

    # (1) invariant abstract channel diagram, strictly smaller than the graph
    cd = validate_abstract_channel_diagram(delta, v0) if delta.edges else None
    ok1 = cd is not None and cd.overall and d_gamma >= 3 and len(des) < len(g.edges)
    rep.record(
        "1_channel_diagram",
        ok1,
        {"d": d_gamma, "channel_edges": sorted(des), "v0": v0,
         "channel_conditions": cd.verdicts if cd else None},
    )

    # (2) branch condition
    outside_edges = [e for e in g.edges.values() if e.id not in des]
    touches = set()
    for e in outside_edges:
        touches.add(e.tail)
        touches.add(e.head)
    problems = []
    for v in sorted(dvs):
        in_closure = v in touches
        if v == v0:
            if in_closure:
                problems.append({"vertex": v, "issue": "v0 meets edges outside the channel diagram"})
            continue
        if not in_closure:
            problems.append({"vertex": v, "issue": "not in the closure of the complement"})
        n_edges = sum(1 for e in delta.edges.values() if {e.tail, e.head} == {v, v0})
        deg = m.local_degree.get(v, 1)
        if n_edges != deg - 1 or n_edges < 1:
            problems.append({"vertex": v, "issue": f"{n_edges} channel edges but local degree {deg}"})
    rep.record("2_branch", not problems, {"problems": problems})

    # (3) Riemann-Hurwitz count
    total = sum(m.local_degree.get(v, 1) - 1 for v in g.vertices)
    rep.record("3_degree_sum", total == 2 * d_gamma - 2, {"sum": total, "expected": 2 * d_gamma - 2})

    # (4) level N
    def steps_to_delta(v):
        seen = set()
        s = 0
        while v not in dvs:
            if v in seen:
                return None
            seen.add(v)
            v = m.vertex_map[v]
            s += 1
        return s

    crit = [v for v in g.vertices if m.local_degree.get(v, 1) > 1]
    steps = {v: steps_to_delta(v) for v in crit}
    if any(s is None for s in steps.values()):
        rep.record("4_level", False, {"N": None, "never_reach": [v for v, s in steps.items() if s is None]})
        n_gamma = None
    else:
        n_gamma = 1 + max(steps.values(), default=0)
        stray_v = [v for v in g.vertices if _iterate(m.vertex_map, v, n_gamma) not in dvs]
        stray_e = [e for e in g.edges if _iterate_edge(m, e, n_gamma) not in des]
        rep.record("4_level", not stray_v and not stray_e,
                   {"N": n_gamma, "vertices_outside": stray_v, "edges_outside": stray_e})

    # (5) closure of the complement is connected
    rest = g.subgraph([e.id for e in outside_edges]) if outside_edges else None
    ok5 = rest is not None and rest.is_connected()
    rep.record("5_complement_connected", ok5, {"edges": len(outside_edges)})

    # (6) regular extension
    try:
        ext = check_regular_extension(g, m)
        rep.record("6_regular_extension", ext.ok, {"problems": [list(map(_jsonable, p)) if isinstance(p, tuple) else p for p in ext.problems]})
    except Exception as exc:  # malformed rotation
        rep.record("6_regular_extension", False, {"error": str(exc)})

    # (7) saturation: local edge counts of the N-fold pullback of the diagram
    if n_gamma is None:
        rep.record("7_saturated", False, {"reason": "N undefined"})
    else:
        mismatch = []
        for v in g.vertices:
            expected = _pullback_count(delta, m, v, n_gamma, v0)
            if expected != g.degree(v):
                mismatch.append({"vertex": v, "edge_ends": g.degree(v), "expected": expected})
        ok7 = not mismatch and g.is_connected()
        rep.record("7_saturated", ok7, {"mismatch": mismatch})
    return rep


def _jsonable(x):
    if isinstance(x, tuple):
        return list(x)
    return x


def _iterate(vmap: dict, v, n: int):
    for _ in range(n):
        v = vmap[v]
    return v


def _iterate_edge(m: GraphMapRecord, e, n: int):
    for _ in range(n):
        img = m.edge_map.get(e)
        if img is None:
            return None
        e = img[0]
    return e


def _pullback_count(delta: EmbeddedGraph, m: GraphMapRecord, v, n: int, v0) -> int:
    """Edge ends at ``v`` of the n-fold pullback of the channel diagram."""
    factor = 1
    for _ in range(n):
        factor *= m.local_degree.get(v, 1)
        v = m.vertex_map[v]
    return factor * delta.degree(v) if v in delta.vertices else 0


# ---------------------------------------------------------------------------
# Face / pole census


def _dart_points(g: EmbeddedGraph, d: tuple) -> list:
    pts = list(g.geometry[d[0]])
    return pts if d[1] == 0 else pts[::-1]


def face_boundary_polygon(g: EmbeddedGraph, face, close_radius: Optional[float] = None) -> list:
    """Closed polygon around a face; passages through infinity become arcs."""
    pts = []
    corners = face.corners
    for t in corners:
        out = g.succ(t)
        v = g.dart_vertex(t)
        if is_inf(g.vertices[v].position):
            a = _dart_points(g, t)[0]
            b = _dart_points(g, out)[0]
            ra, rb = abs(a), abs(b)
            ta, tb = cmath.phase(a), cmath.phase(b)
            sweep = (ta - tb) % (2 * math.pi)
            if out == t or sweep == 0:
                sweep = 2 * math.pi
            steps = max(8, int(sweep / 0.05))
            for s in range(steps + 1):
                u = s / steps
                r = ra + (rb - ra) * u
                pts.append(r * cmath.exp(1j * (ta - sweep * u)))
        pts.extend(_dart_points(g, out))
    return pts


def winding_number(poly: list, p: complex) -> int:
    arr = np.asarray(poly + poly[:1], dtype=complex) - p
    ang = np.angle(arr[1:] / arr[:-1])
    return int(round(ang.sum() / (2 * math.pi)))


def face_pole_census(f: RationalMap, g: EmbeddedGraph) -> list:
    """Per face of a channel diagram: poles inside (with multiplicity) and boundary roots."""
    faces = trace_faces(g)
    poles = poles_of(f)
    out = []
    for face in faces:
        poly = face_boundary_polygon(g, face)
        inside = sum(k for p, k in poles if winding_number(poly, p) != 0)
        roots = {v for v in face.vertices(g) if g.vertices[v].kind == "root"}
        out.append({"face": face.id, "poles": inside, "boundary_fixed_points": len(roots)})
    return out


def shared_pole_witnesses(f: RationalMap, delta: EmbeddedGraph, level1: EmbeddedGraph) -> list:
    """Per face of the diagram: poles inside it adjacent in level 1 to at least two roots."""
    faces = trace_faces(delta)
    out = []
    for face in faces:
        poly = face_boundary_polygon(delta, face)
        wit = []
        for vid, v in level1.vertices.items():
            if v.kind != "pole" or winding_number(poly, v.position) == 0:
                continue
            roots = {w for w in level1.neighbors(vid) if level1.vertices[w].kind == "root"}
            if len(roots) >= 2:
                wit.append(vid)
        out.append({"face": face.id, "witnesses": sorted(wit)})
    return out
