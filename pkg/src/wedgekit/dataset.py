"""Dataset loading, serialization, statistics, and synthetic fixtures.

Two on-disk formats are supported. The multi-file benchmark layout
stores one corpus as parallel line-oriented files (edge list with
1-based global vertex ids, per-vertex graph indicator, per-graph class
labels, per-vertex label tuples, per-vertex coordinates, per-edge
labels). Nothing in that layout documents which label column means
what, so the parser recovers the semantics structurally: it accepts
the unique assignment of (arrangement edge-label value, point-type
column, glyph-type column) under which every clique component is a
4-vertex wedge with distinct point types and the arrangement edges
connect exactly one shared vertex per wedge. The native JSON format is
explicit and round-trips datasets without loss.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import (
    GLYPH_BY_NAME,
    GLYPH_NAMES,
    POINT_NAMES,
    CuneiformGraph,
    GlyphType,
    PointType,
    build_from_wedges,
    validate,
)


class DatasetError(Exception):
    """Base class for dataset loading errors."""


class MissingFile(DatasetError, FileNotFoundError):
    pass


class RaggedRecord(DatasetError, ValueError):
    """Line counts or field counts disagree across the parallel files."""


class LabelMappingUnverifiable(DatasetError, ValueError):
    """No unique column assignment satisfies the structural invariants."""


class SchemaViolation(DatasetError, ValueError):
    """JSON document deviates from the wedge-graph schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.json_path = path


class EmptyDataset(DatasetError, ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    graphs: tuple
    class_names: tuple
    tablet_ids: tuple | None = None

    def __post_init__(self):
        for g in self.graphs:
            if g.class_label not in self.class_names:
                raise DatasetError(
                    f"graph {g.graph_id!r} labelled {g.class_label!r}, "
                    "which is not a known class"
                )

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def labels(self) -> np.ndarray:
        """Class index per graph, in graph order."""
        index = {name: k for k, name in enumerate(self.class_names)}
        return np.array([index[g.class_label] for g in self.graphs], dtype=np.int64)

    def by_class(self, name: str) -> list:
        return [g for g in self.graphs if g.class_label == name]


@dataclass(frozen=True)
class ClassStats:
    name: str
    n_graphs: int
    n_vertices: int  # per-graph count shared by most instances
    n_edges: int
    h_max: float
    w_max: float


@dataclass(frozen=True)
class DatasetStats:
    classes: tuple
    total_graphs: int
    total_vertices: int
    total_edges: int


def compute_stats(d: Dataset) -> DatasetStats:
    """Per-class sizes and bounding-box maxima, plus corpus totals.

    The per-class vertex/edge cells report the per-graph count shared
    by the most instances (ties resolved to the smaller count); totals
    sum over every graph individually.
    """
    if not d.graphs:
        raise EmptyDataset("dataset has no graphs")
    rows = []
    for name in d.class_names:
        graphs = d.by_class(name)
        if not graphs:
            continue
        nv = Counter(g.n_vertices for g in graphs)
        ne = Counter(g.n_edges for g in graphs)
        top = max(nv.values())
        modal_v = min(v for v, c in nv.items() if c == top)
        top = max(ne.values())
        modal_e = min(e for e, c in ne.items() if c == top)
        boxes = [g.bbox() for g in graphs]
        rows.append(
            ClassStats(
                name=name,
                n_graphs=len(graphs),
                n_vertices=modal_v,
                n_edges=modal_e,
                h_max=max(h for h, _ in boxes),
                w_max=max(w for _, w in boxes),
            )
        )
    return DatasetStats(
        classes=tuple(rows),
        total_graphs=len(d.graphs),
        total_vertices=sum(g.n_vertices for g in d.graphs),
        total_edges=sum(g.n_edges for g in d.graphs),
    )


# ---------------------------------------------------------------------------
# multi-file benchmark format

_SUFFIXES = (
    "A",
    "graph_indicator",
    "graph_labels",
    "node_labels",
    "node_attributes",
    "edge_labels",
)


def _read_rows(path: Path) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([f.strip() for f in line.split(",")])
    return rows


def _infer_structure(edges, edge_labels, n_vertices, graph_of):
    """Choose the arrangement edge-label value and recover the wedges.

    Returns (arr_value, wedge_sets, depth_of_wedge) or None if this
    candidate arrangement value violates the wedge-clique structure.
    """
    values = sorted(set(edge_labels))
    for arr_value in values if len(values) > 1 else values + [None]:
        # union-find over clique edges
        parent = list(range(n_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        clique_pairs = set()
        arr_pairs = []
        ok = True
        for (a, b), lab in zip(edges, edge_labels):
            if graph_of[a] != graph_of[b]:
                return None, None, None, "edge connects vertices of distinct graphs"
            if lab == arr_value:
                arr_pairs.append((a, b))
            else:
                clique_pairs.add((a, b))
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        groups: dict[int, list[int]] = {}
        for v in range(n_vertices):
            groups.setdefault(find(v), []).append(v)
        wedges = list(groups.values())
        for members in wedges:
            if len(members) != 4:
                ok = False
                break
            for a in members:
                for b in members:
                    if a != b and (a, b) not in clique_pairs:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        # arrangement edges must touch one designated vertex per wedge
        wedge_of = {}
        for wi, members in enumerate(wedges):
            for v in members:
                wedge_of[v] = wi
        depth_of = {}
        for a, b in arr_pairs:
            for v in (a, b):
                wi = wedge_of[v]
                if depth_of.setdefault(wi, v) != v:
                    ok = False
                    break
            if not ok:
                break
            if wedge_of[a] == wedge_of[b]:
                ok = False
                break
        if not ok:
            continue
        # every ordered pair of wedges within a graph must be connected
        by_graph: dict[int, list[int]] = {}
        for wi, members in enumerate(wedges):
            by_graph.setdefault(graph_of[members[0]], []).append(wi)
        need = sum(len(ws) * (len(ws) - 1) for ws in by_graph.values())
        if len(arr_pairs) != need or len(set(arr_pairs)) != need:
            continue
        seen = set(arr_pairs)
        for ws in by_graph.values():
            for wi in ws:
                for wj in ws:
                    if wi != wj and (depth_of[wi], depth_of[wj]) not in seen:
                        ok = False
        if not ok:
            continue
        return arr_value, wedges, depth_of, None
    return None, None, None, None


def parse_tudataset(directory, name: str | None = None) -> Dataset:
    """Load a corpus from the multi-file benchmark layout."""
    directory = Path(directory)
    if name is None:
        hits = sorted(directory.glob("*_A.txt"))
        if not hits:
            raise MissingFile(f"no *_A.txt in {directory}")
        name = hits[0].name[: -len("_A.txt")]
    paths = {s: directory / f"{name}_{s}.txt" for s in _SUFFIXES}
    for s, p in paths.items():
        if not p.is_file():
            raise MissingFile(str(p))

    raw_edges = _read_rows(paths["A"])
    raw_gi = _read_rows(paths["graph_indicator"])
    raw_gl = _read_rows(paths["graph_labels"])
    raw_nl = _read_rows(paths["node_labels"])
    raw_na = _read_rows(paths["node_attributes"])
    raw_el = _read_rows(paths["edge_labels"])

    if len(raw_edges) != len(raw_el):
        raise RaggedRecord(
            f"{len(raw_edges)} edges but {len(raw_el)} edge labels"
        )
    if not (len(raw_gi) == len(raw_nl) == len(raw_na)):
        raise RaggedRecord(
            f"vertex files disagree: {len(raw_gi)} indicator rows, "
            f"{len(raw_nl)} label rows, {len(raw_na)} attribute rows"
        )
    n_vertices = len(raw_gi)
    try:
        edges = [(int(r[0]) - 1, int(r[1]) - 1) for r in raw_edges]
        graph_of = [int(r[0]) - 1 for r in raw_gi]
        graph_labels = [int(r[0]) for r in raw_gl]
        edge_labels = [int(r[0]) for r in raw_el]
        node_labels = [[int(f) for f in r] for r in raw_nl]
        node_attrs = [[float(f) for f in r] for r in raw_na]
    except (ValueError, IndexError) as e:
        raise RaggedRecord(f"unparseable record: {e}") from None
    for a, b in edges:
        if not (0 <= a < n_vertices and 0 <= b < n_vertices):
            raise RaggedRecord(f"edge ({a + 1}, {b + 1}) out of vertex range")
    if graph_of and (min(graph_of) < 0 or max(graph_of) + 1 != len(graph_labels)):
        raise RaggedRecord(
            f"graph indicator spans {max(graph_of) + 1} graphs, "
            f"{len(graph_labels)} labels given"
        )

    ncols = {len(r) for r in node_attrs}
    if len(ncols) != 1 or ncols.pop() not in (2, 3):
        raise RaggedRecord("node attributes must have 2 or 3 columns throughout")
    if len(node_attrs[0]) == 3:
        warnings.warn(
            "node attributes carry 3 coordinates; dropping the third column",
            stacklevel=2,
        )
        node_attrs = [r[:2] for r in node_attrs]

    lcols = {len(r) for r in node_labels}
    if len(lcols) != 1:
        raise RaggedRecord("node label rows have inconsistent column counts")
    n_label_cols = lcols.pop()
    if n_label_cols < 2:
        raise LabelMappingUnverifiable(
            "need at least point-type and glyph-type label columns"
        )

    arr_value, wedges, depth_of, fatal = _infer_structure(
        edges, edge_labels, n_vertices, graph_of
    )
    if fatal:
        raise LabelMappingUnverifiable(fatal)
    if wedges is None:
        raise LabelMappingUnverifiable(
            "no edge-label value yields 4-vertex wedge cliques with "
            "depth-to-depth arrangement edges"
        )

    # point column: 4 distinct values per wedge, one shared depth value;
    # glyph column: constant per wedge
    candidates = []
    for pcol in range(n_label_cols):
        depth_values = {node_labels[depth_of[wi]][pcol] for wi in depth_of}
        if len(depth_values) > 1:
            continue
        if any(len({node_labels[v][pcol] for v in ws}) != 4 for ws in wedges):
            continue
        for gcol in range(n_label_cols):
            if gcol == pcol:
                continue
            if any(len({node_labels[v][gcol] for v in ws}) != 1 for ws in wedges):
                continue
            candidates.append((pcol, gcol))
    if not candidates:
        raise LabelMappingUnverifiable(
            "no label column assignment satisfies the wedge invariants"
        )
    if len(candidates) > 1:
        raise LabelMappingUnverifiable(
            f"ambiguous label columns: {candidates}"
        )
    pcol, gcol = candidates[0]

    point_values = sorted({r[pcol] for r in node_labels})
    if len(point_values) != 4:
        raise LabelMappingUnverifiable(
            f"point column {pcol} has {len(point_values)} values, expected 4"
        )
    if depth_of:
        depth_value = node_labels[next(iter(depth_of.values()))][pcol]
    else:
        depth_value = point_values[0]
    if set(point_values) == {0, 1, 2, 3} and depth_value == 0:
        point_map = {int(pt): pt for pt in PointType}
    else:
        rest = [v for v in point_values if v != depth_value]
        point_map = {depth_value: PointType.DEPTH}
        for v, pt in zip(rest, (PointType.TAIL, PointType.RIGHT, PointType.LEFT)):
            point_map[v] = pt
    glyph_values = sorted({r[gcol] for r in node_labels})
    if len(glyph_values) > 3:
        raise LabelMappingUnverifiable(
            f"glyph column {gcol} has {len(glyph_values)} values, expected <= 3"
        )
    if set(glyph_values) <= {0, 1, 2}:
        glyph_map = {int(g): g for g in GlyphType}
    else:
        glyph_map = {
            v: g
            for v, g in zip(
                glyph_values,
                (GlyphType.VERTICAL, GlyphType.HORIZONTAL, GlyphType.WINKELHAKEN),
            )
        }

    label_values = sorted(set(graph_labels))
    names_path = directory / f"{name}_graph_label_names.txt"
    if names_path.is_file():
        names = [r[0] for r in _read_rows(names_path)]
        if len(names) != len(label_values):
            raise RaggedRecord(
                f"{len(names)} class names for {len(label_values)} label values"
            )
    else:
        names = [f"class_{v}" for v in label_values]
    name_of = dict(zip(label_values, names))

    wedges_by_graph: dict[int, list[tuple[int, list[int]]]] = {}
    for wi, members in enumerate(wedges):
        gidx = graph_of[members[0]]
        wedges_by_graph.setdefault(gidx, []).append((min(members), members))
    graphs = []
    for gidx in range(len(graph_labels)):
        specs = []
        for _, members in sorted(wedges_by_graph.get(gidx, [])):
            glyph = glyph_map[node_labels[members[0]][gcol]]
            points = {
                point_map[node_labels[v][pcol]]: tuple(node_attrs[v]) for v in members
            }
            specs.append((glyph, points))
        graphs.append(
            build_from_wedges(specs, graph_id=gidx, class_label=name_of[graph_labels[gidx]])
        )
    return Dataset(graphs=tuple(graphs), class_names=tuple(names))


def write_tudataset(d: Dataset, directory, name: str) -> None:
    """Write a dataset in the multi-file benchmark layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a, gi, nl, na, el = [], [], [], [], []
    offset = 0
    for k, g in enumerate(d.graphs, start=1):
        for e in g.edges:
            a.append(f"{e.src + 1 + offset}, {e.dst + 1 + offset}")
            el.append(str(int(e.kind)))
        for v in g.vertices:
            gi.append(str(k))
            nl.append(f"{int(v.point_type)}, {int(v.glyph_type)}")
            na.append(f"{v.position[0]!r}, {v.position[1]!r}")
        offset += g.n_vertices
    label_of = {nm: i + 1 for i, nm in enumerate(d.class_names)}
    gl = [str(label_of[g.class_label]) for g in d.graphs]
    files = {
        "A": a,
        "graph_indicator": gi,
        "graph_labels": gl,
        "node_labels": nl,
        "node_attributes": na,
        "edge_labels": el,
        "graph_label_names": list(d.class_names),
    }
    for suffix, lines in files.items():
        with open(directory / f"{name}_{suffix}.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# native JSON format


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaViolation(path, message)


def _as_point(value, path: str) -> tuple[float, float]:
    _expect(
        isinstance(value, (list, tuple)) and len(value) == 2,
        path,
        "expected [x, y]",
    )
    for k, c in enumerate(value):
        _expect(isinstance(c, (int, float)) and not isinstance(c, bool), f"{path}[{k}]", "expected a number")
    return float(value[0]), float(value[1])


def parse_json(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    _expect(isinstance(doc, dict), "$", "expected an object")
    _expect(isinstance(doc.get("class_names"), list), "$.class_names", "expected a list")
    names = []
    for k, nm in enumerate(doc["class_names"]):
        _expect(isinstance(nm, str), f"$.class_names[{k}]", "expected a string")
        names.append(nm)
    _expect(isinstance(doc.get("graphs"), list), "$.graphs", "expected a list")
    graphs = []
    for gi, rec in enumerate(doc["graphs"]):
        base = f"$.graphs[{gi}]"
        _expect(isinstance(rec, dict), base, "expected an object")
        _expect("id" in rec, f"{base}.id", "missing")
        label = rec.get("label")
        _expect(isinstance(label, str), f"{base}.label", "expected a string")
        _expect(label in names, f"{base}.label", f"unknown class {label!r}")
        _expect(isinstance(rec.get("wedges"), list), f"{base}.wedges", "expected a list")
        specs = []
        for wi, wrec in enumerate(rec["wedges"]):
            wbase = f"{base}.wedges[{wi}]"
            _expect(isinstance(wrec, dict), wbase, "expected an object")
            glyph = wrec.get("glyph")
            _expect(
                glyph in GLYPH_BY_NAME,
                f"{wbase}.glyph",
                f"expected one of {sorted(GLYPH_BY_NAME)}",
            )
            pts = wrec.get("points")
            _expect(isinstance(pts, dict), f"{wbase}.points", "expected an object")
            coords = {}
            for pt in PointType:
                key = POINT_NAMES[pt]
                _expect(key in pts, f"{wbase}.points.{key}", "missing")
                coords[pt] = _as_point(pts[key], f"{wbase}.points.{key}")
            extra = set(pts) - set(POINT_NAMES.values())
            _expect(not extra, f"{wbase}.points", f"unknown keys {sorted(extra)}")
            specs.append((GLYPH_BY_NAME[glyph], coords))
        graphs.append(build_from_wedges(specs, graph_id=rec["id"], class_label=label))
    return Dataset(graphs=tuple(graphs), class_names=tuple(names))


def write_json(d: Dataset, path) -> None:
    doc = {
        "class_names": list(d.class_names),
        "graphs": [
            {
                "id": g.graph_id,
                "label": g.class_label,
                "wedges": [
                    {
                        "glyph": GLYPH_NAMES[w.glyph_type],
                        "points": {
                            POINT_NAMES[g.vertices[vid].point_type]: [
                                g.vertices[vid].position[0],
                                g.vertices[vid].position[1],
                            ]
                            for vid in w.vertex_ids
                        },
                    }
                    for w in g.wedges
                ],
            }
            for g in d.graphs
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# synthetic fixtures

_WEDGE_SHAPES = {
    GlyphType.VERTICAL: ((0.0, 0.0), (0.0, -1.0), (0.3, 0.18), (-0.3, 0.18)),
    GlyphType.HORIZONTAL: ((0.0, 0.0), (1.0, 0.0), (0.18, 0.3), (0.18, -0.3)),
    GlyphType.WINKELHAKEN: ((0.0, 0.0), (0.7, -0.7), (0.45, 0.12), (-0.12, -0.45)),
}


def _wedge_spec(glyph: GlyphType, site, scale: float = 1.0):
    shape = _WEDGE_SHAPES[glyph]
    return (
        glyph,
        {
            pt: (site[0] + scale * dx, site[1] + scale * dy)
            for pt, (dx, dy) in zip(PointType, shape)
        },
    )


def synthesize(
    classes: int,
    per_class: int,
    wedge_range: tuple[int, int] = (1, 4),
    seed: int = 0,
    noise: float = 0.05,
) -> Dataset:
    """Deterministic synthetic dataset for tests.

    Each class has a random prototype; instances are affine
    perturbations (rotation, isotropic scale, translation) of it, with
    noise scaling all perturbation amplitudes. noise=0 repeats the
    prototype verbatim.
    """
    if classes < 1 or per_class < 1:
        raise ValueError("classes and per_class must be >= 1")
    lo, hi = wedge_range
    if not (1 <= lo <= hi):
        raise ValueError("wedge_range must satisfy 1 <= lo <= hi")
    rng = np.random.default_rng([seed, 91])
    names = tuple(f"syn{c:02d}" for c in range(classes))
    graphs = []
    gid = 0
    for c, name in enumerate(names):
        w = int(rng.integers(lo, hi + 1))
        sites = rng.uniform(0.0, 5.0, (w, 2))
        glyphs = [GlyphType(int(v)) for v in rng.integers(0, 3, w)]
        scales = rng.uniform(0.8, 1.2, w)
        proto = np.array(
            [
                [
                    (sx + s * dx, sy + s * dy)
                    for dx, dy in _WEDGE_SHAPES[gl]
                ]
                for (sx, sy), gl, s in zip(sites, glyphs, scales)
            ]
        )  # (w, 4, 2)
        for _ in range(per_class):
            theta = rng.normal(0.0, noise)
            scale = 1.0 + noise * rng.uniform(-1.0, 1.0)
            shift = noise * rng.uniform(-2.0, 2.0, 2)
            rot = np.array(
                [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
            )
            pts = (proto.reshape(-1, 2) @ rot.T) * scale + shift
            pts = pts.reshape(w, 4, 2)
            specs = [
                (gl, {pt: tuple(pts[k, int(pt)]) for pt in PointType})
                for k, gl in enumerate(glyphs)
            ]
            graphs.append(build_from_wedges(specs, graph_id=gid, class_label=name))
            gid += 1
    d = Dataset(graphs=tuple(graphs), class_names=names)
    for g in d.graphs:
        assert not validate(g)
    return d
