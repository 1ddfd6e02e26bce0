"""Ideal triangulations of compact 3-manifolds with boundary.

A triangulation is stored at the gluing level: a list of tetrahedra whose
corners carry vertex-class labels, and a list of face gluings.  Everything
else (edge classes, vertex links, Euler characteristics, degrees) is derived
once at construction time and kept on an immutable :class:`Triangulation`.

Documents are JSON::

    {"mode": "simple", "tets": [[0, 1, 2, 3], [0, 1, 2, 3]]}

    {"mode": "explicit",
     "tets": [[0, 1, 2, 3], [0, 1, 2, 3]],
     "gluings": [{"a": [0, 0], "b": [1, 0], "map": [0, 1, 2]}, ...]}

Face ``f`` of a tetrahedron is the face opposite corner ``f``.  ``map`` sends
the k-th corner of face ``a`` (corners in ascending order) to the ``map[k]``-th
corner of face ``b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import NamedTuple

import numpy as np

# tetrahedron edge slots; slot s and slot 5 - s are opposite edges
EDGE_SLOTS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
SLOT_INDEX = {pair: s for s, pair in enumerate(EDGE_SLOTS)}
SLOT_INDEX.update({(q, p): s for (p, q), s in list(SLOT_INDEX.items())})


class TriangulationError(ValueError):
    """Raised for malformed or invalid triangulation documents."""


def face_corners(face: int) -> tuple[int, int, int]:
    """Corners of face ``face`` (the face opposite that corner), ascending."""
    return tuple(c for c in range(4) if c != face)


@dataclass(frozen=True)
class FaceGluing:
    a: tuple[int, int]
    b: tuple[int, int]
    map: tuple[int, int, int]

    def corner_map(self) -> dict[int, int]:
        """Tetrahedron-corner correspondence from face ``a`` to face ``b``."""
        ca = face_corners(self.a[1])
        cb = face_corners(self.b[1])
        out = {ca[k]: cb[self.map[k]] for k in range(3)}
        out[self.a[1]] = self.b[1]
        return out


@dataclass(frozen=True)
class EdgeClass:
    endpoints: tuple[int, int]
    members: tuple[tuple[int, int], ...]  # (tet, edge slot)

    @property
    def is_loop(self) -> bool:
        return self.endpoints[0] == self.endpoints[1]


class LinkSummary(NamedTuple):
    faces: int
    edges: int
    vertices: int
    euler_char: int
    degree: int


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the smaller root so class ids follow first occurrence
            if rx < ry:
                self.parent[ry] = rx
            else:
                self.parent[rx] = ry


@dataclass(frozen=True, eq=False)
class Triangulation:
    """A validated ideal triangulation with all derived combinatorics.

    Vertex classes are dense ids ``0..N-1``; ``labels[i]`` is the id used in
    the source document.
    """

    tets: tuple[tuple[int, int, int, int], ...]
    gluings: tuple[FaceGluing, ...]
    labels: tuple[int, ...]
    edge_classes: tuple[EdgeClass, ...]
    slot_class: np.ndarray  # (n_tets, 6) edge-class id of each edge slot
    link_faces: tuple[int, ...]
    link_edges: tuple[int, ...]
    link_vertices: tuple[int, ...]
    euler_chars: tuple[int, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @property
    def n_edges(self) -> int:
        return len(self.edge_classes)

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.link_faces

    @property
    def corners(self) -> np.ndarray:
        """(n_tets, 4) integer array of dense vertex-class ids."""
        return np.array(self.tets, dtype=np.intp).reshape(-1, 4)

    def edge_endpoints(self) -> np.ndarray:
        return np.array([e.endpoints for e in self.edge_classes], dtype=np.intp).reshape(-1, 2)

    def neighbor(self, tet: int, face: int) -> tuple[int, int, tuple[int, int, int, int]]:
        """Return ``(tet', face', perm)`` where ``perm[c]`` is the image of corner c."""
        return self._neighbors[(tet, face)]

    @property
    def _neighbors(self) -> dict:
        cache = self.__dict__.get("_nbr_cache")
        if cache is None:
            cache = {}
            for g in self.gluings:
                fwd = g.corner_map()
                inv = {v: k for k, v in fwd.items()}
                cache[g.a] = (g.b[0], g.b[1], tuple(fwd[c] for c in range(4)))
                cache[g.b] = (g.a[0], g.a[1], tuple(inv[c] for c in range(4)))
            object.__setattr__(self, "_nbr_cache", cache)
        return cache

    def link(self, i: int) -> LinkSummary:
        return vertex_link(self, i)

    def to_dict(self) -> dict:
        """Explicit-mode document using the original vertex labels."""
        return {
            "mode": "explicit",
            "tets": [[self.labels[v] for v in tet] for tet in self.tets],
            "gluings": [
                {"a": list(g.a), "b": list(g.b), "map": list(g.map)} for g in self.gluings
            ],
        }

    def summary(self) -> str:
        chis = set(self.euler_chars)
        degs = set(self.degrees)
        head = f"N={self.n_vertices} tets={self.n_tets} edges={self.n_edges}"
        if len(chis) == 1 and len(degs) == 1:
            return f"{head}; all χ={chis.pop()}, d={degs.pop()}"
        per = ", ".join(
            f"v{self.labels[i]}: χ={self.euler_chars[i]}, d={self.degrees[i]}"
            for i in range(self.n_vertices)
        )
        return f"{head}; {per}"


def vertex_link(T: Triangulation, i: int) -> LinkSummary:
    """Combinatorics of the link surface of vertex class ``i``."""
    if not 0 <= i < T.n_vertices:
        raise IndexError(f"unknown vertex class {i}")
    return LinkSummary(
        T.link_faces[i], T.link_edges[i], T.link_vertices[i], T.euler_chars[i], T.link_faces[i]
    )


# ---------------------------------------------------------------------------
# parsing


def _as_int(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise TriangulationError(f"{what}: expected an integer, got {x!r}")
    return x


def _simple_gluings(tets: list[tuple[int, ...]]) -> list[FaceGluing]:
    for t, tet in enumerate(tets):
        if len(set(tet)) != 4:
            raise TriangulationError(
                f"tets[{t}]: simple mode requires four distinct vertex ids, got {list(tet)}"
            )
    incidences: dict[frozenset, list[tuple[int, int]]] = {}
    for t, tet in enumerate(tets):
        for f in range(4):
            key = frozenset(tet[c] for c in face_corners(f))
            incidences.setdefault(key, []).append((t, f))
    gluings = []
    for key, inc in incidences.items():
        if len(inc) != 2:
            raise TriangulationError(
                f"simple mode: vertex triple {sorted(key)} occurs {len(inc)} times "
                f"(tet, face) {inc}; expected exactly 2"
            )
        (ta, fa), (tb, fb) = inc
        la = [tets[ta][c] for c in face_corners(fa)]
        lb = [tets[tb][c] for c in face_corners(fb)]
        gluings.append(FaceGluing((ta, fa), (tb, fb), tuple(lb.index(v) for v in la)))
    gluings.sort(key=lambda g: (g.a, g.b))
    return gluings


def _explicit_gluings(raw, n_tets: int) -> list[FaceGluing]:
    if not isinstance(raw, list):
        raise TriangulationError("'gluings' must be a list in explicit mode")
    out = []
    for n, g in enumerate(raw):
        where = f"gluings[{n}]"
        if not isinstance(g, dict) or not {"a", "b", "map"} <= g.keys():
            raise TriangulationError(f"{where}: expected an object with keys a, b, map")
        sides = []
        for key in ("a", "b"):
            side = g[key]
            if not isinstance(side, list) or len(side) != 2:
                raise TriangulationError(f"{where}.{key}: expected [tet, face]")
            t, f = (_as_int(x, f"{where}.{key}") for x in side)
            if not 0 <= t < n_tets or not 0 <= f < 4:
                raise TriangulationError(f"{where}.{key}: (tet {t}, face {f}) out of range")
            sides.append((t, f))
        m = g["map"]
        if not isinstance(m, list) or sorted(_as_int(x, f"{where}.map") for x in m) != [0, 1, 2]:
            raise TriangulationError(f"{where}.map: expected a permutation of [0, 1, 2], got {m!r}")
        if sides[0] == sides[1]:
            raise TriangulationError(f"{where}: face (tet {sides[0][0]}, face {sides[0][1]}) glued to itself")
        out.append(FaceGluing(sides[0], sides[1], tuple(m)))
    return out


def parse_triangulation(text: str | bytes) -> Triangulation:
    """Parse and validate a triangulation document."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if not text.strip():
        raise TriangulationError("malformed document: empty input")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TriangulationError(
            f"malformed document: {exc.msg} (line {exc.lineno}, column {exc.colno})"
        ) from None
    return triangulation_from_dict(doc)


def load_triangulation(path: str | Path) -> Triangulation:
    return parse_triangulation(Path(path).read_bytes())


def triangulation_from_dict(doc) -> Triangulation:
    if not isinstance(doc, dict):
        raise TriangulationError("malformed document: top level must be an object")
    mode = doc.get("mode", "explicit" if "gluings" in doc else "simple")
    if mode not in ("simple", "explicit"):
        raise TriangulationError(f"mode: expected 'simple' or 'explicit', got {mode!r}")
    raw_tets = doc.get("tets")
    if not isinstance(raw_tets, list) or not raw_tets:
        raise TriangulationError("tets: expected a non-empty list")
    tets = []
    for t, tet in enumerate(raw_tets):
        if not isinstance(tet, list) or len(tet) != 4:
            raise TriangulationError(f"tets[{t}]: expected four vertex ids")
        ids = tuple(_as_int(v, f"tets[{t}]") for v in tet)
        if min(ids) < 0:
            raise TriangulationError(f"tets[{t}]: vertex ids must be nonnegative")
        tets.append(ids)

    if mode == "simple":
        if doc.get("gluings"):
            raise TriangulationError("simple mode does not take 'gluings'")
        gluings = _simple_gluings(tets)
    else:
        gluings = _explicit_gluings(doc.get("gluings", []), len(tets))
    return build_triangulation(tets, gluings)


def build_triangulation(tets, gluings) -> Triangulation:
    """Validate gluing data and derive all combinatorial indices."""
    tets = [tuple(t) for t in tets]
    n = len(tets)
    if n == 0:
        raise TriangulationError("tets: expected a non-empty list")

    seen: dict[tuple[int, int], int] = {}
    for k, g in enumerate(gluings):
        for side in (g.a, g.b):
            if side in seen:
                raise TriangulationError(
                    f"doubly-glued face (tet {side[0]}, face {side[1]}) in gluings {seen[side]} and {k}"
                )
            seen[side] = k
    for t in range(n):
        for f in range(4):
            if (t, f) not in seen:
                raise TriangulationError(f"unglued face (tet {t}, face {f})")

    # labels must agree across every gluing
    for g in gluings:
        for p, q in g.corner_map().items():
            if p == g.a[1]:
                continue
            la, lb = tets[g.a[0]][p], tets[g.b[0]][q]
            if la != lb:
                raise TriangulationError(
                    f"vertex-class mismatch: gluing {g.a}->{g.b} sends corner {p} "
                    f"(vertex {la}) to corner {q} (vertex {lb})"
                )

    # union-find over corners (4 per tet) and oriented edge ends (12 per tet)
    corners_uf = _UnionFind(4 * n)
    ends_uf = _UnionFind(12 * n)

    def end_id(t: int, p: int, q: int) -> int:
        return 12 * t + 3 * p + (q if q < p else q - 1)

    for g in gluings:
        (ta, fa), (tb, _) = g.a, g.b
        cmap = g.corner_map()
        fc = face_corners(fa)
        for p in fc:
            corners_uf.union(4 * ta + p, 4 * tb + cmap[p])
        for p, q in combinations(fc, 2):
            ends_uf.union(end_id(ta, p, q), end_id(tb, cmap[p], cmap[q]))
            ends_uf.union(end_id(ta, q, p), end_id(tb, cmap[q], cmap[p]))

    labels = sorted({v for tet in tets for v in tet})
    dense = {v: i for i, v in enumerate(labels)}
    N = len(labels)
    dtets = tuple(tuple(dense[v] for v in tet) for tet in tets)

    # each label must be a single glued vertex class (connected link)
    roots: dict[int, int] = {}
    for t, tet in enumerate(dtets):
        for p, v in enumerate(tet):
            r = corners_uf.find(4 * t + p)
            if roots.setdefault(v, r) != r:
                raise TriangulationError(
                    f"link of vertex {labels[v]} is disconnected: its corners fall into "
                    f"more than one glued vertex class"
                )

    # edge classes from pairs of end classes, in first-occurrence order
    edge_of_pair: dict[tuple[int, int], int] = {}
    slot_class = np.empty((n, 6), dtype=np.intp)
    endpoints: list[tuple[int, int]] = []
    members: list[list[tuple[int, int]]] = []
    for t, tet in enumerate(dtets):
        for s, (p, q) in enumerate(EDGE_SLOTS):
            ep, eq = ends_uf.find(end_id(t, p, q)), ends_uf.find(end_id(t, q, p))
            if ep == eq:
                raise TriangulationError(
                    f"edge slot {(p, q)} of tet {t} is identified with itself reversed; "
                    f"the vertex link is not a surface"
                )
            key = (min(ep, eq), max(ep, eq))
            if key not in edge_of_pair:
                edge_of_pair[key] = len(endpoints)
                endpoints.append(tuple(sorted((tet[p], tet[q]))))
                members.append([])
            e = edge_of_pair[key]
            slot_class[t, s] = e
            members[e].append((t, s))
    edge_classes = tuple(EdgeClass(ep, tuple(m)) for ep, m in zip(endpoints, members))
    slot_class.setflags(write=False)

    F = [0] * N
    for tet in dtets:
        for v in tet:
            F[v] += 1
    V = [0] * N
    for a, b in endpoints:
        V[a] += 1
        V[b] += 1
    # every link edge is a (corner, face through it) pair, identified in twos
    E = [3 * f // 2 for f in F]
    chis = []
    for i in range(N):
        if (3 * F[i]) % 2:
            raise TriangulationError(f"link of vertex {labels[i]} has an odd number of triangles")
        chi = V[i] - E[i] + F[i]
        if chi % 2 or chi > 2:
            raise TriangulationError(
                f"link of vertex {labels[i]} has Euler characteristic {chi}; "
                f"expected an even integer <= 2"
            )
        chis.append(chi)

    return Triangulation(
        tets=dtets,
        gluings=tuple(gluings),
        labels=tuple(labels),
        edge_classes=edge_classes,
        slot_class=slot_class,
        link_faces=tuple(F),
        link_edges=tuple(E),
        link_vertices=tuple(V),
        euler_chars=tuple(chis),
    )
