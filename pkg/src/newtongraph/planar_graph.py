"""Embedded graphs given by rotation systems, and maps between them.

A *dart* is an edge end ``(edge_id, end)`` with ``end == 0`` at the edge's
tail and ``end == 1`` at its head. The rotation at a vertex lists its darts in
counterclockwise order; at the vertex of kind ``infinity`` the order is taken
in the chart ``w = 1/z``, i.e. clockwise as seen in the z-plane.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from .complex_poly import INF, SpherePoint, is_inf
from .errors import MalformedGraphError

VERTEX_KINDS = ("infinity", "root", "pole", "prepole", "root-preimage", "vertex")


@dataclass(frozen=True)
class VertexRecord:
    id: int
    kind: str = "vertex"
    position: Optional[SpherePoint] = None
    level: int = 0


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    tail: int
    head: int
    level: int = 0

    def end_vertex(self, end: int) -> int:
        return self.tail if end == 0 else self.head


@dataclass(frozen=True)
class GraphMapRecord:
    """Self-map data: vertex images, edge images with orientation, local degrees.

    ``edge_map[e] = (image_edge, reversed)``; ``reversed`` is True when the
    tail of ``e`` goes to the head of the image edge.
    """

    vertex_map: dict
    edge_map: dict
    local_degree: dict

    def dart(self, d: tuple) -> Optional[tuple]:
        img = self.edge_map.get(d[0])
        if img is None:
            return None
        e, rev = img
        return (e, d[1] ^ int(rev))


@dataclass(frozen=True)
class EmbeddedGraph:
    vertices: dict  # id -> VertexRecord
    edges: dict  # id -> EdgeRecord
    rotation: dict  # vertex id -> tuple of darts, counterclockwise
    geometry: dict = field(default_factory=dict)  # edge id -> tuple of points tail..head

    # -- basic structure ----------------------------------------------------

    def dart_vertex(self, d: tuple) -> int:
        return self.edges[d[0]].end_vertex(d[1])

    @staticmethod
    def twin(d: tuple) -> tuple:
        return (d[0], 1 - d[1])

    def succ(self, d: tuple) -> tuple:
        rot = self._positions()
        v = self.dart_vertex(d)
        seq = self.rotation[v]
        return seq[(rot[d] + 1) % len(seq)]

    def _positions(self) -> dict:
        cache = self.__dict__.get("_pos_cache")
        if cache is None:
            cache = {}
            for v, seq in self.rotation.items():
                for i, d in enumerate(seq):
                    cache[d] = i
            object.__setattr__(self, "_pos_cache", cache)
        return cache

    def position_of(self, d: tuple) -> int:
        return self._positions()[d]

    def degree(self, v: int) -> int:
        return len(self.rotation.get(v, ()))

    def darts(self):
        for eid in sorted(self.edges):
            yield (eid, 0)
            yield (eid, 1)

    def neighbors(self, v: int) -> list:
        return [self.dart_vertex(self.twin(d)) for d in self.rotation.get(v, ())]

    def infinity_vertex(self) -> Optional[int]:
        inf = [v.id for v in self.vertices.values() if v.kind == "infinity"]
        return inf[0] if len(inf) == 1 else None

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        start = min(self.vertices)
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(self.vertices)

    def validate(self) -> None:
        """Raise MalformedGraphError unless rotations partition the darts."""
        for e in self.edges.values():
            if e.tail not in self.vertices or e.head not in self.vertices:
                raise MalformedGraphError(f"edge {e.id} has a missing endpoint")
        seen = set()
        for v, seq in self.rotation.items():
            if v not in self.vertices:
                raise MalformedGraphError(f"rotation given for unknown vertex {v}")
            for d in seq:
                d = tuple(d)
                if d[0] not in self.edges or d[1] not in (0, 1):
                    raise MalformedGraphError(f"unknown dart {d} at vertex {v}")
                if self.dart_vertex(d) != v:
                    raise MalformedGraphError(f"dart {d} listed at {v} but attached to {self.dart_vertex(d)}")
                if d in seen:
                    raise MalformedGraphError(f"dart {d} appears twice in the rotation")
                seen.add(d)
        missing = set(self.darts()) - seen
        if missing:
            raise MalformedGraphError(f"darts missing from rotation: {sorted(missing)}")
        if not self.is_connected():
            raise MalformedGraphError("graph is not connected")

    # -- derived graphs ------------------------------------------------------

    def subgraph(self, edge_ids, vertex_ids=None) -> "EmbeddedGraph":
        edge_ids = set(edge_ids)
        vids = set(vertex_ids or ())
        for e in edge_ids:
            vids.add(self.edges[e].tail)
            vids.add(self.edges[e].head)
        rot = {v: tuple(d for d in self.rotation.get(v, ()) if d[0] in edge_ids) for v in vids}
        return EmbeddedGraph(
            {v: self.vertices[v] for v in vids},
            {e: self.edges[e] for e in edge_ids},
            rot,
            {e: g for e, g in self.geometry.items() if e in edge_ids},
        )


# ---------------------------------------------------------------------------
# Faces


@dataclass(frozen=True)
class Face:
    id: int
    corners: tuple  # corner = starting dart (corner runs from it to its rotation successor)

    def vertices(self, g: EmbeddedGraph) -> list:
        return [g.dart_vertex(c) for c in self.corners]


def trace_faces(g: EmbeddedGraph) -> list:
    """Faces as cyclic corner sequences; follows ``d -> succ(twin(d))``."""
    g.validate()
    if not g.edges:
        return [Face(0, ())]
    seen = set()
    faces = []
    for d0 in g.darts():
        if d0 in seen:
            continue
        corners = []
        d = d0
        while d not in seen:
            seen.add(d)
            t = g.twin(d)
            corners.append(t)
            d = g.succ(t)
        faces.append(Face(len(faces), tuple(corners)))
    v, e, f = len(g.vertices), len(g.edges), len(faces)
    if v - e + f != 2:
        raise MalformedGraphError(f"Euler relation fails: V - E + F = {v} - {e} + {f}")
    return faces


def corner_owner(faces: list) -> dict:
    return {c: f.id for f in faces for c in f.corners}


# ---------------------------------------------------------------------------
# Graph maps


@dataclass
class MapReport:
    ok: bool
    problems: list = field(default_factory=list)


def is_graph_map(g: EmbeddedGraph, m: GraphMapRecord, target: Optional[EmbeddedGraph] = None) -> MapReport:
    target = target or g
    rep = MapReport(True)

    def bad(msg):
        rep.ok = False
        rep.problems.append(msg)

    for v in g.vertices:
        img = m.vertex_map.get(v)
        if img is None or img not in target.vertices:
            bad(f"vertex {v} has no image vertex")
        deg = m.local_degree.get(v)
        if not isinstance(deg, int) or deg < 1:
            bad(f"vertex {v} has invalid local degree {deg!r}")
    for e in g.edges.values():
        img = m.edge_map.get(e.id)
        if img is None or not isinstance(img, tuple) or img[0] not in target.edges:
            bad(f"edge {e.id} is not mapped onto an edge")
            continue
        te = target.edges[img[0]]
        ends = (te.head, te.tail) if img[1] else (te.tail, te.head)
        if (m.vertex_map.get(e.tail), m.vertex_map.get(e.head)) != ends:
            bad(f"edge {e.id} endpoints do not map to the endpoints of edge {img[0]}")
    return rep


def _corner_ranges(g: EmbeddedGraph, m: GraphMapRecord, target: EmbeddedGraph, rep: MapReport) -> dict:
    """Per corner: (image vertex, first image slot, slot count)."""
    out = {}
    for v, seq in g.rotation.items():
        if not seq:
            continue
        y = m.vertex_map[v]
        ny = target.degree(y)
        images = [m.dart(d) for d in seq]
        if any(im is None or im not in target._positions() or target.dart_vertex(im) != y for im in images):
            rep.ok = False
            rep.problems.append(("dart-image", v))
            continue
        pos = [target.position_of(im) for im in images]
        n = len(seq)
        spans = []
        for i in range(n):
            s = (pos[(i + 1) % n] - pos[i]) % ny
            spans.append(s if s else ny)
        if sum(spans) != m.local_degree[v] * ny:
            rep.ok = False
            rep.problems.append(("winding", v, sum(spans), m.local_degree[v] * ny))
        for i, d in enumerate(seq):
            out[d] = (y, pos[i], spans[i], ny)
    return out


def check_regular_extension(g: EmbeddedGraph, m: GraphMapRecord, target: Optional[EmbeddedGraph] = None) -> MapReport:
    """Sector-injectivity test for the existence of a regular extension.

    Each corner at ``v`` is sent to the run of corner slots at ``g(v)`` swept
    counterclockwise from the image of its first dart to the image of its second.
    Within every face, the runs landing at a common vertex must be disjoint.
    Problems are ``("overlap", face, y, corner_a, corner_b)`` or ``("winding", ...)``.
    """
    target = target or g
    rep = MapReport(True)
    faces = trace_faces(g)
    ranges = _corner_ranges(g, m, target, rep)
    for face in faces:
        used = defaultdict(dict)  # y -> slot -> corner
        for c in face.corners:
            if c not in ranges:
                continue
            y, start, span, ny = ranges[c]
            for t in range(span):
                slot = (start + t) % ny
                other = used[y].get(slot)
                if other is not None:
                    rep.ok = False
                    rep.problems.append(("overlap", face.id, y, other, c))
                    break
                used[y][slot] = c
    return rep


# ---------------------------------------------------------------------------
# Equivalence


def _propagate(g1: EmbeddedGraph, g2: EmbeddedGraph, d1: tuple, d2: tuple) -> Optional[dict]:
    h = {d1: d2}
    queue = deque([d1])
    used = {d2}
    while queue:
        x = queue.popleft()
        y = h[x]
        for nx, ny in ((g1.succ(x), g2.succ(y)), (g1.twin(x), g2.twin(y))):
            if nx in h:
                if h[nx] != ny:
                    return None
            else:
                if ny in used:
                    return None
                h[nx] = ny
                used.add(ny)
                queue.append(nx)
    return h


def find_equivalences(
    g1: EmbeddedGraph,
    m1: Optional[GraphMapRecord],
    g2: EmbeddedGraph,
    m2: Optional[GraphMapRecord],
) -> list:
    """All rotation-preserving graph isomorphisms ``h`` with ``h g1 = g2 h``.

    A witness is ``{"vertices": {v: h(v)}, "edges": {e: (h(e), reversed)}}``.
    Anchoring one dart determines ``h`` on all darts of a connected graph, so
    the search is one propagation per candidate image of a fixed anchor dart.
    """
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return []
    if not g1.edges:
        if len(g1.vertices) != 1:
            return []
        (a,), (b,) = list(g1.vertices), list(g2.vertices)
        w = {"vertices": {a: b}, "edges": {}}
        return [w] if _conjugates(g1, m1, g2, m2, w, {}) else []
    inf1, inf2 = g1.infinity_vertex(), g2.infinity_vertex()
    if inf1 is not None and inf2 is not None:
        anchor_v, candidates = inf1, [inf2]
    else:
        anchor_v = min(v for v in g1.vertices if g1.degree(v) > 0)
        candidates = sorted(g2.vertices)
    d1 = g1.rotation[anchor_v][0]
    witnesses = []
    for v2 in candidates:
        if g2.degree(v2) != g1.degree(anchor_v):
            continue
        for d2 in g2.rotation[v2]:
            h = _propagate(g1, g2, d1, d2)
            if h is None or len(h) != 2 * len(g1.edges):
                continue
            vmap = {}
            ok = True
            for x, y in h.items():
                a, b = g1.dart_vertex(x), g2.dart_vertex(y)
                if vmap.setdefault(a, b) != b:
                    ok = False
                    break
            if not ok or len(set(vmap.values())) != len(vmap) or len(vmap) != len(g1.vertices):
                continue
            emap = {e: (h[(e, 0)][0], bool(h[(e, 0)][1])) for e in g1.edges}
            w = {"vertices": vmap, "edges": emap}
            if _conjugates(g1, m1, g2, m2, w, h):
                witnesses.append(w)
    return witnesses


def _conjugates(g1, m1, g2, m2, w, h) -> bool:
    if m1 is None or m2 is None:
        return True
    vmap = w["vertices"]
    for v, hv in vmap.items():
        if vmap.get(m1.vertex_map[v]) != m2.vertex_map.get(hv):
            return False
        if m1.local_degree.get(v) != m2.local_degree.get(hv):
            return False
    for d, hd in h.items():
        img1 = m1.dart(d)
        img2 = m2.dart(hd)
        if img1 is None or img2 is None or h.get(img1) != img2:
            return False
    return True


def identity_map(g: EmbeddedGraph) -> GraphMapRecord:
    return GraphMapRecord(
        {v: v for v in g.vertices},
        {e: (e, False) for e in g.edges},
        {v: 1 for v in g.vertices},
    )


def relabel(g: EmbeddedGraph, m: Optional[GraphMapRecord], vperm: dict, eperm: dict):
    """Copy of ``(g, m)`` with vertex ids ``vperm[v]`` and edge ids ``eperm[e]``."""
    verts = {vperm[v]: VertexRecord(vperm[v], r.kind, r.position, r.level) for v, r in g.vertices.items()}
    edges = {eperm[e]: EdgeRecord(eperm[e], vperm[r.tail], vperm[r.head], r.level) for e, r in g.edges.items()}
    rot = {vperm[v]: tuple((eperm[e], s) for e, s in seq) for v, seq in g.rotation.items()}
    geo = {eperm[e]: pts for e, pts in g.geometry.items()}
    g2 = EmbeddedGraph(verts, edges, rot, geo)
    if m is None:
        return g2, None
    m2 = GraphMapRecord(
        {vperm[v]: vperm[w] for v, w in m.vertex_map.items()},
        {eperm[e]: (eperm[t], r) for e, (t, r) in m.edge_map.items()},
        {vperm[v]: k for v, k in m.local_degree.items()},
    )
    return g2, m2


# ---------------------------------------------------------------------------
# Rotation from geometry


def _angle_at_finite(pts, vpos: complex) -> float:
    for z in pts[1:]:
        if abs(z - vpos) > 1e-12 * (1.0 + abs(vpos)):
            return cmath.phase(z - vpos)
    return cmath.phase(pts[-1] - vpos)


def _angle_at_infinity(pts, radius: float) -> float:
    """Argument where the polyline (running towards infinity) last crosses ``|z| = radius``."""
    n = len(pts)
    for i in range(n - 1, 0, -1):
        a, b = pts[i - 1], pts[i]
        if abs(a) < radius <= abs(b):
            t = (radius - abs(a)) / (abs(b) - abs(a))
            return cmath.phase(a + t * (b - a))
    return cmath.phase(pts[-1])


def rotation_from_geometry(vertices: dict, edges: dict, geometry: dict, inf_radius: float = 1e5):
    """Counterclockwise rotation at each vertex from edge departure angles.

    Returns ``(rotation, flags)``; ``flags`` lists vertices whose angular gaps
    fall below 1e-6 (near-degenerate ordering).
    """
    ends = defaultdict(list)
    for e in edges.values():
        pts = geometry[e.id]
        for end, seq in ((0, pts), (1, tuple(reversed(pts)))):
            vid = e.end_vertex(end)
            pos = vertices[vid].position
            if is_inf(pos):
                ang = -_angle_at_infinity(seq[::-1], inf_radius)
            else:
                ang = _angle_at_finite(seq, pos)
            ends[vid].append(((ang % (2 * math.pi), e.id, end), (e.id, end)))
    rotation = {}
    flags = []
    for vid in vertices:
        lst = sorted(ends.get(vid, []))
        rotation[vid] = tuple(d for _, d in lst)
        angs = [k[0] for k, _ in lst]
        if len(angs) > 1:
            gaps = [(angs[(i + 1) % len(angs)] - angs[i]) % (2 * math.pi) for i in range(len(angs))]
            if min(gaps) < 1e-6:
                flags.append(vid)
    return rotation, flags


# ---------------------------------------------------------------------------
# Serialisation


def _point_json(z):
    if z is None:
        return None
    if is_inf(z):
        return "inf"
    return {"re": z.real, "im": z.imag}


def graph_to_json(g: EmbeddedGraph, m: Optional[GraphMapRecord] = None, with_geometry: bool = True) -> dict:
    verts = []
    for vid in sorted(g.vertices):
        v = g.vertices[vid]
        rec = {"id": vid, "kind": v.kind, "level": v.level}
        if v.position is not None and not is_inf(v.position):
            rec["re"] = v.position.real
            rec["im"] = v.position.imag
        verts.append(rec)
    edges = [
        {"id": e.id, "from": e.tail, "to": e.head, "level": e.level}
        for e in (g.edges[k] for k in sorted(g.edges))
    ]
    out = {
        "vertices": verts,
        "edges": edges,
        "rotation": {str(v): [[d[0], d[1]] for d in g.rotation.get(v, ())] for v in sorted(g.vertices)},
    }
    if with_geometry and g.geometry:
        out["geometry"] = {
            str(e): [[z.real, z.imag] for z in g.geometry[e]] for e in sorted(g.geometry)
        }
    if m is not None:
        out["map"] = map_to_json(m)
    return out


def map_to_json(m: GraphMapRecord) -> dict:
    return {
        "vertices": {str(v): m.vertex_map[v] for v in sorted(m.vertex_map)},
        "edges": {str(e): [m.edge_map[e][0], -1 if m.edge_map[e][1] else 1] for e in sorted(m.edge_map)},
        "local_degree": {str(v): m.local_degree[v] for v in sorted(m.local_degree)},
    }


def graph_from_json(data: dict):
    """Inverse of ``graph_to_json``; returns ``(graph, map or None)``."""
    verts = {}
    for v in data["vertices"]:
        vid = int(v["id"])
        kind = v.get("kind", "vertex")
        if kind == "infinity":
            pos = INF
        elif "re" in v or "im" in v:
            pos = complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
        else:
            pos = None
        verts[vid] = VertexRecord(vid, kind, pos, int(v.get("level", 0)))
    edges = {}
    for e in data["edges"]:
        eid = int(e["id"])
        edges[eid] = EdgeRecord(eid, int(e["from"]), int(e["to"]), int(e.get("level", 0)))
    rotation = {}
    for k, seq in data.get("rotation", {}).items():
        rotation[int(k)] = tuple((int(d[0]), int(d[1])) for d in seq)
    for vid in verts:
        rotation.setdefault(vid, ())
    geometry = {}
    for k, pts in data.get("geometry", {}).items():
        geometry[int(k)] = tuple(complex(p[0], p[1]) for p in pts)
    g = EmbeddedGraph(verts, edges, rotation, geometry)
    m = None
    if data.get("map"):
        mj = data["map"]
        m = GraphMapRecord(
            {int(k): int(v) for k, v in mj.get("vertices", {}).items()},
            {
                int(k): (None if v is None else (int(v[0]), int(v[1]) < 0))
                for k, v in mj.get("edges", {}).items()
            },
            {int(k): int(v) for k, v in mj.get("local_degree", {}).items()},
        )
    return g, m


def graph_to_dot(g: EmbeddedGraph, m: Optional[GraphMapRecord] = None, name: str = "G") -> str:
    """Graphviz DOT; each edge carries its slot in the rotation at both ends."""
    lines = [f"graph {name} {{"]
    for vid in sorted(g.vertices):
        v = g.vertices[vid]
        attrs = [f'label="{vid}:{v.kind}"', f"level={v.level}"]
        if v.position is not None and not is_inf(v.position):
            attrs.append(f'pos="{v.position.real:.17g},{v.position.imag:.17g}"')
        if m is not None and vid in m.vertex_map:
            attrs.append(f"image={m.vertex_map[vid]}")
            attrs.append(f"local_degree={m.local_degree.get(vid, 1)}")
        lines.append(f"  v{vid} [{', '.join(attrs)}];")
    for eid in sorted(g.edges):
        e = g.edges[eid]
        attrs = [
            f'label="{eid}"',
            f"level={e.level}",
            f"tail_slot={g.position_of((eid, 0))}",
            f"head_slot={g.position_of((eid, 1))}",
        ]
        if m is not None and eid in m.edge_map and m.edge_map[eid] is not None:
            t, r = m.edge_map[eid]
            attrs.append(f'image="{t}{"-" if r else "+"}"')
        lines.append(f"  v{e.tail} -- v{e.head} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
