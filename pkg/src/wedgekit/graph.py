"""Attributed wedge graphs for cuneiform signs.

A sign is a set of wedges. Each wedge contributes four typed vertices
(depth, tail, right, left) that form a directed clique, and the depth
vertices of distinct wedges are pairwise connected by directed
"arrangement" edges encoding relative wedge placement. All edges are
stored explicitly in both directions, so a graph with w wedges has
4w vertices and 12w + w(w-1) directed edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class PointType(enum.IntEnum):
    DEPTH = 0
    TAIL = 1
    RIGHT = 2
    LEFT = 3


class GlyphType(enum.IntEnum):
    VERTICAL = 0
    HORIZONTAL = 1
    WINKELHAKEN = 2


class EdgeKind(enum.IntEnum):
    WEDGE_CLIQUE = 0
    ARRANGEMENT = 1


POINT_NAMES = {p: p.name.lower() for p in PointType}
GLYPH_NAMES = {g: g.name.lower() for g in GlyphType}
POINT_BY_NAME = {v: k for k, v in POINT_NAMES.items()}
GLYPH_BY_NAME = {v: k for k, v in GLYPH_NAMES.items()}


class GraphError(ValueError):
    """Base class for graph construction errors."""


class MalformedWedge(GraphError):
    """A wedge is missing a point type or repeats one."""


class NonFiniteCoordinate(GraphError):
    """A vertex position contains NaN or infinity."""


class NotArrangementEdge(GraphError):
    """Operation requires an arrangement edge."""


@dataclass(frozen=True)
class Vertex:
    id: int
    point_type: PointType
    glyph_type: GlyphType
    position: tuple[float, float]


@dataclass(frozen=True)
class Wedge:
    # vertex ids ordered (depth, tail, right, left)
    vertex_ids: tuple[int, int, int, int]
    glyph_type: GlyphType


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: EdgeKind


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str

    def __str__(self) -> str:
        return f"{self.invariant}: {self.detail}"


class CuneiformGraph:
    """Immutable attributed graph of one cuneiform sign."""

    def __init__(
        self,
        graph_id,
        class_label: str,
        vertices: Sequence[Vertex],
        wedges: Sequence[Wedge],
        edges: Sequence[Edge],
    ):
        self.graph_id = graph_id
        self.class_label = class_label
        self.vertices = tuple(vertices)
        self.wedges = tuple(wedges)
        self.edges = tuple(edges)
        self._positions = None
        self._edge_array = None
        self._arrangement_offsets = None

    @property
    def n_wedges(self) -> int:
        return len(self.wedges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def positions(self) -> np.ndarray:
        """(|V|, 2) float array of vertex coordinates (read-only)."""
        if self._positions is None:
            pos = np.array([v.position for v in self.vertices], dtype=np.float64)
            pos = pos.reshape(self.n_vertices, 2)
            pos.flags.writeable = False
            self._positions = pos
        return self._positions

    @property
    def point_types(self) -> np.ndarray:
        return np.array([int(v.point_type) for v in self.vertices], dtype=np.int64)

    @property
    def glyph_types(self) -> np.ndarray:
        return np.array([int(v.glyph_type) for v in self.vertices], dtype=np.int64)

    @property
    def depth_vertex_ids(self) -> np.ndarray:
        """One depth vertex id per wedge, in wedge order."""
        return np.array([w.vertex_ids[0] for w in self.wedges], dtype=np.int64)

    @property
    def edge_array(self) -> np.ndarray:
        """(|E|, 3) int array of (src, dst, kind) rows (read-only)."""
        if self._edge_array is None:
            arr = np.array(
                [(e.src, e.dst, int(e.kind)) for e in self.edges], dtype=np.int64
            ).reshape(self.n_edges, 3)
            arr.flags.writeable = False
            self._edge_array = arr
        return self._edge_array

    def arrangement_offsets(self) -> np.ndarray:
        """(w, w, 2) tensor: offsets[a, b] = depth_b - depth_a (read-only)."""
        if self._arrangement_offsets is None:
            depth_pos = self.positions[self.depth_vertex_ids]
            off = depth_pos[None, :, :] - depth_pos[:, None, :]
            off.flags.writeable = False
            self._arrangement_offsets = off
        return self._arrangement_offsets

    def bbox(self) -> tuple[float, float]:
        """Axis-aligned bounding box (height, width)."""
        pos = self.positions
        h = float(pos[:, 1].max() - pos[:, 1].min())
        w = float(pos[:, 0].max() - pos[:, 0].min())
        return h, w

    def with_positions(self, positions: np.ndarray, graph_id=None) -> "CuneiformGraph":
        """Copy of this graph with replaced vertex coordinates."""
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape != (self.n_vertices, 2):
            raise GraphError(
                f"positions shape {positions.shape} != ({self.n_vertices}, 2)"
            )
        vertices = [
            Vertex(v.id, v.point_type, v.glyph_type, (float(x), float(y)))
            for v, (x, y) in zip(self.vertices, positions)
        ]
        return CuneiformGraph(
            self.graph_id if graph_id is None else graph_id,
            self.class_label,
            vertices,
            self.wedges,
            self.edges,
        )

    def wedge_positions(self, wedge_index: int) -> np.ndarray:
        """(4, 2) positions of one wedge's vertices in (D, T, R, L) order."""
        return self.positions[list(self.wedges[wedge_index].vertex_ids)]

    def __eq__(self, other):
        if not isinstance(other, CuneiformGraph):
            return NotImplemented
        return (
            self.graph_id == other.graph_id
            and self.class_label == other.class_label
            and self.vertices == other.vertices
            and self.wedges == other.wedges
            and self.edges == other.edges
        )

    def __repr__(self):
        return (
            f"CuneiformGraph(id={self.graph_id!r}, label={self.class_label!r}, "
            f"wedges={self.n_wedges}, vertices={self.n_vertices}, edges={self.n_edges})"
        )


WedgePoints = Mapping


def _coerce_points(points) -> dict[PointType, tuple[float, float]]:
    out: dict[PointType, tuple[float, float]] = {}
    items = points.items() if isinstance(points, Mapping) else points
    for key, xy in items:
        if isinstance(key, str):
            if key not in POINT_BY_NAME:
                raise MalformedWedge(f"unknown point type {key!r}")
            pt = POINT_BY_NAME[key]
        else:
            pt = PointType(key)
        if pt in out:
            raise MalformedWedge(f"duplicate point type {POINT_NAMES[pt]}")
        xy = (float(xy[0]), float(xy[1]))
        if not (math.isfinite(xy[0]) and math.isfinite(xy[1])):
            raise NonFiniteCoordinate(f"{POINT_NAMES[pt]} position {xy} is not finite")
        out[pt] = xy
    missing = [POINT_NAMES[p] for p in PointType if p not in out]
    if missing:
        raise MalformedWedge(f"missing point types: {', '.join(missing)}")
    return out


def build_from_wedges(
    wedge_specs: Iterable,
    graph_id=0,
    class_label: str = "",
) -> CuneiformGraph:
    """Build a graph from (glyph_type, points) wedge specs.

    `points` maps the four point types (enum values or lowercase names)
    to 2D coordinates. Vertex ids are dense in wedge order, one wedge
    occupying four consecutive ids as (depth, tail, right, left).
    """
    vertices: list[Vertex] = []
    wedges: list[Wedge] = []
    for glyph, points in wedge_specs:
        if isinstance(glyph, str):
            if glyph not in GLYPH_BY_NAME:
                raise MalformedWedge(f"unknown glyph type {glyph!r}")
            glyph = GLYPH_BY_NAME[glyph]
        else:
            glyph = GlyphType(glyph)
        coords = _coerce_points(points)
        base = len(vertices)
        ids = []
        for pt in PointType:
            vid = base + int(pt)
            vertices.append(Vertex(vid, pt, glyph, coords[pt]))
            ids.append(vid)
        wedges.append(Wedge(tuple(ids), glyph))

    edges: list[Edge] = []
    for w in wedges:
        for a in w.vertex_ids:
            for b in w.vertex_ids:
                if a != b:
                    edges.append(Edge(a, b, EdgeKind.WEDGE_CLIQUE))
    depth_ids = [w.vertex_ids[0] for w in wedges]
    for i, a in enumerate(depth_ids):
        for j, b in enumerate(depth_ids):
            if i != j:
                edges.append(Edge(a, b, EdgeKind.ARRANGEMENT))

    return CuneiformGraph(graph_id, class_label, vertices, wedges, edges)


def validate(g: CuneiformGraph) -> list[Violation]:
    """Check every structural invariant; violations are data, not errors."""
    out: list[Violation] = []
    w = g.n_wedges
    if g.n_vertices != 4 * w:
        out.append(
            Violation("VertexCount", f"|V|={g.n_vertices}, expected 4*{w}={4 * w}")
        )

    seen_ids: dict[int, int] = {}
    for wi, wedge in enumerate(g.wedges):
        pts = []
        for vid in wedge.vertex_ids:
            if vid < 0 or vid >= g.n_vertices:
                out.append(Violation("VertexId", f"wedge {wi} references vertex {vid}"))
                continue
            if vid in seen_ids:
                out.append(
                    Violation(
                        "SharedVertex",
                        f"vertex {vid} in wedges {seen_ids[vid]} and {wi}",
                    )
                )
            seen_ids[vid] = wi
            v = g.vertices[vid]
            pts.append(v.point_type)
            if v.glyph_type != wedge.glyph_type:
                out.append(
                    Violation(
                        "GlyphMismatch",
                        f"vertex {vid} glyph {GLYPH_NAMES[v.glyph_type]} != "
                        f"wedge {wi} glyph {GLYPH_NAMES[wedge.glyph_type]}",
                    )
                )
        for pt in PointType:
            n = pts.count(pt)
            if n > 1:
                out.append(
                    Violation(
                        "DuplicatePointType",
                        f"wedge {wi} has {n} {POINT_NAMES[pt]} vertices",
                    )
                )
            elif n == 0:
                out.append(
                    Violation(
                        "MissingPointType", f"wedge {wi} has no {POINT_NAMES[pt]} vertex"
                    )
                )
    for v in g.vertices:
        if v.id not in seen_ids:
            out.append(Violation("OrphanVertex", f"vertex {v.id} not in any wedge"))
        if not (math.isfinite(v.position[0]) and math.isfinite(v.position[1])):
            out.append(
                Violation("NonFiniteCoordinate", f"vertex {v.id} at {v.position}")
            )

    vertex_wedge = seen_ids
    clique_expected = set()
    for wedge in g.wedges:
        for a in wedge.vertex_ids:
            for b in wedge.vertex_ids:
                if a != b:
                    clique_expected.add((a, b))
    depth_ids = [wedge.vertex_ids[0] for wedge in g.wedges]
    arr_expected = set()
    for i, a in enumerate(depth_ids):
        for j, b in enumerate(depth_ids):
            if i != j:
                arr_expected.add((a, b))

    clique_seen = set()
    arr_seen = set()
    for e in g.edges:
        key = (e.src, e.dst)
        if e.kind == EdgeKind.WEDGE_CLIQUE:
            if key not in clique_expected:
                out.append(
                    Violation(
                        "CliqueAcrossWedges",
                        f"clique edge {key} does not join two vertices of one wedge",
                    )
                )
            elif key in clique_seen:
                out.append(Violation("DuplicateEdge", f"clique edge {key} repeated"))
            clique_seen.add(key)
        elif e.kind == EdgeKind.ARRANGEMENT:
            if key not in arr_expected:
                out.append(
                    Violation(
                        "ArrangementEndpoint",
                        f"arrangement edge {key} must join depth vertices of "
                        "distinct wedges",
                    )
                )
            elif key in arr_seen:
                out.append(Violation("DuplicateEdge", f"arrangement edge {key} repeated"))
            arr_seen.add(key)
        else:
            out.append(Violation("EdgeKind", f"edge {key} has kind {e.kind}"))

    for key in sorted(clique_expected - clique_seen):
        out.append(Violation("CliqueIncomplete", f"missing clique edge {key}"))
    for key in sorted(arr_expected - arr_seen):
        out.append(Violation("ArrangementIncomplete", f"missing arrangement edge {key}"))

    expected_edges = 12 * w + w * (w - 1)
    if g.n_edges != expected_edges:
        out.append(
            Violation(
                "EdgeCount", f"|E|={g.n_edges}, expected 12w+w(w-1)={expected_edges}"
            )
        )
    return out


def arrangement_vector(g: CuneiformGraph, e: Edge) -> np.ndarray:
    """Offset p_dst - p_src annotating one arrangement edge."""
    if e.kind != EdgeKind.ARRANGEMENT:
        raise NotArrangementEdge(f"edge ({e.src}, {e.dst}) has kind {e.kind.name}")
    pos = g.positions
    return pos[e.dst] - pos[e.src]
