"""Dataset containers, the two on-disk formats, and synthetic fixtures."""

import json

import numpy as np
import pytest

from wedgekit.dataset import (
    Dataset,
    DatasetError,
    EmptyDataset,
    LabelMappingUnverifiable,
    MissingFile,
    RaggedRecord,
    SchemaViolation,
    compute_stats,
    parse_json,
    parse_tudataset,
    synthesize,
    write_json,
    write_tudataset,
)
from wedgekit.graph import GlyphType, PointType, build_from_wedges, validate


def one_wedge_graph(gid=0, label="a", x=0.0, glyph=GlyphType.VERTICAL):
    points = {
        PointType.DEPTH: (x, 0.0),
        PointType.TAIL: (x, -1.0),
        PointType.RIGHT: (x + 0.3, 0.2),
        PointType.LEFT: (x - 0.3, 0.2),
    }
    return build_from_wedges([(glyph, points)], graph_id=gid, class_label=label)


class TestContainer:
    def test_labels_follow_class_name_order(self):
        d = Dataset(
            graphs=(one_wedge_graph(0, "b"), one_wedge_graph(1, "a"), one_wedge_graph(2, "b")),
            class_names=("a", "b"),
        )
        assert d.labels.tolist() == [1, 0, 1]
        assert len(d) == 3

    def test_by_class_filters(self):
        d = Dataset(
            graphs=(one_wedge_graph(0, "b"), one_wedge_graph(1, "a")),
            class_names=("a", "b"),
        )
        assert [g.graph_id for g in d.by_class("b")] == [0]
        assert d.by_class("missing") == []

    def test_unknown_label_rejected(self):
        with pytest.raises(DatasetError, match="not a known class"):
            Dataset(graphs=(one_wedge_graph(0, "zz"),), class_names=("a",))


class TestStats:
    def test_totals_sum_every_graph(self, small_synth):
        st = compute_stats(small_synth)
        assert st.total_graphs == len(small_synth)
        assert st.total_vertices == sum(g.n_vertices for g in small_synth.graphs)
        assert st.total_edges == sum(g.n_edges for g in small_synth.graphs)

    def test_modal_counts_break_ties_toward_smaller(self):
        # two 1-wedge and two 2-wedge instances: tie resolves to 4 vertices
        g0 = one_wedge_graph(0, "a")
        g1 = one_wedge_graph(1, "a")
        two = [
            build_from_wedges(
                [
                    (GlyphType.VERTICAL, {
                        PointType.DEPTH: (0.0, 0.0),
                        PointType.TAIL: (0.0, -1.0),
                        PointType.RIGHT: (0.3, 0.2),
                        PointType.LEFT: (-0.3, 0.2),
                    }),
                    (GlyphType.HORIZONTAL, {
                        PointType.DEPTH: (3.0, 0.0),
                        PointType.TAIL: (4.0, 0.0),
                        PointType.RIGHT: (3.2, 0.3),
                        PointType.LEFT: (3.2, -0.3),
                    }),
                ],
                graph_id=gid,
                class_label="a",
            )
            for gid in (2, 3)
        ]
        st = compute_stats(Dataset(graphs=(g0, g1, *two), class_names=("a",)))
        assert st.classes[0].n_vertices == 4
        assert st.classes[0].n_edges == 12

    def test_box_maxima_cover_the_class(self):
        d = Dataset(
            graphs=(one_wedge_graph(0, "a"), one_wedge_graph(1, "a", x=10.0)),
            class_names=("a",),
        )
        st = compute_stats(d)
        h, w = d.graphs[0].bbox()
        assert st.classes[0].h_max == pytest.approx(h)
        assert st.classes[0].w_max == pytest.approx(w)

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            compute_stats(Dataset(graphs=(), class_names=("a",)))


class TestBenchmarkLayout:
    def test_round_trip(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        back = parse_tudataset(tmp_path)
        assert back.class_names == small_synth.class_names
        assert back.graphs == small_synth.graphs

    def test_round_trip_single_wedge_graphs(self, tmp_path):
        d = Dataset(
            graphs=(one_wedge_graph(0, "a"), one_wedge_graph(1, "b", x=5.0)),
            class_names=("a", "b"),
        )
        write_tudataset(d, tmp_path, "demo")
        assert parse_tudataset(tmp_path, "demo").graphs == d.graphs

    def test_name_inferred_from_edge_file(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "somepile")
        assert parse_tudataset(tmp_path).class_names == small_synth.class_names

    def test_missing_directory_entry(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        (tmp_path / "demo_edge_labels.txt").unlink()
        with pytest.raises(MissingFile):
            parse_tudataset(tmp_path)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(MissingFile, match="no .*_A.txt"):
            parse_tudataset(tmp_path)

    def test_ragged_edge_labels(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_edge_labels.txt"
        lines = p.read_text().splitlines()
        p.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(RaggedRecord, match="edge labels"):
            parse_tudataset(tmp_path)

    def test_ragged_vertex_files(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_node_labels.txt"
        p.write_text(p.read_text() + "0, 0\n")
        with pytest.raises(RaggedRecord, match="vertex files disagree"):
            parse_tudataset(tmp_path)

    def test_unparseable_record(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_A.txt"
        lines = p.read_text().splitlines()
        lines[0] = "fish, 2"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(RaggedRecord, match="unparseable"):
            parse_tudataset(tmp_path)

    def test_edge_out_of_range(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_A.txt"
        lines = p.read_text().splitlines()
        lines[0] = "1, 999999"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(RaggedRecord, match="out of vertex range"):
            parse_tudataset(tmp_path)

    def test_corrupt_edge_labels_unverifiable(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_edge_labels.txt"
        rng = np.random.default_rng(3)
        lines = [str(int(v)) for v in rng.integers(0, 2, len(p.read_text().splitlines()))]
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(LabelMappingUnverifiable):
            parse_tudataset(tmp_path)

    def test_single_label_column_unverifiable(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_node_labels.txt"
        lines = [row.split(",")[0] for row in p.read_text().splitlines()]
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(LabelMappingUnverifiable, match="at least"):
            parse_tudataset(tmp_path)

    def test_swapped_label_columns_recovered(self, tmp_path, small_synth):
        # column order is undocumented; parser must identify roles itself
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_node_labels.txt"
        swapped = []
        for row in p.read_text().splitlines():
            a, b = [f.strip() for f in row.split(",")]
            swapped.append(f"{b}, {a}")
        p.write_text("\n".join(swapped) + "\n")
        assert parse_tudataset(tmp_path).graphs == small_synth.graphs

    def test_shifted_label_values_recovered(self, tmp_path, small_synth):
        # arbitrary integer codes, order preserved: roles recovered from
        # structure, identities from the sorted code order
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_node_labels.txt"
        rows = []
        for row in p.read_text().splitlines():
            a, b = [int(f) for f in row.split(",")]
            rows.append(f"{10 + 3 * a}, {7 + 2 * b}")
        p.write_text("\n".join(rows) + "\n")
        back = parse_tudataset(tmp_path)
        assert back.graphs == small_synth.graphs

    def test_three_coordinate_columns_warn_and_drop(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_node_attributes.txt"
        rows = [row + ", 0.0" for row in p.read_text().splitlines()]
        p.write_text("\n".join(rows) + "\n")
        with pytest.warns(UserWarning, match="third"):
            back = parse_tudataset(tmp_path)
        assert back.graphs == small_synth.graphs

    def test_class_name_file_mismatch(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        p = tmp_path / "demo_graph_label_names.txt"
        p.write_text("only_one\n")
        with pytest.raises(RaggedRecord, match="class names"):
            parse_tudataset(tmp_path)

    def test_missing_name_file_falls_back_to_codes(self, tmp_path, small_synth):
        write_tudataset(small_synth, tmp_path, "demo")
        (tmp_path / "demo_graph_label_names.txt").unlink()
        back = parse_tudataset(tmp_path)
        assert all(nm.startswith("class_") for nm in back.class_names)
        assert np.array_equal(back.labels, small_synth.labels)


class TestJsonFormat:
    def test_round_trip(self, tmp_path, small_synth):
        path = tmp_path / "d.json"
        write_json(small_synth, path)
        back = parse_json(path)
        assert back.class_names == small_synth.class_names
        assert back.graphs == small_synth.graphs

    def write_doc(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        return path

    def test_root_must_be_object(self, tmp_path):
        with pytest.raises(SchemaViolation, match=r"\$: expected an object"):
            parse_json(self.write_doc(tmp_path, []))

    def test_class_names_required(self, tmp_path):
        with pytest.raises(SchemaViolation) as err:
            parse_json(self.write_doc(tmp_path, {"graphs": []}))
        assert err.value.json_path == "$.class_names"

    def test_label_must_be_known(self, tmp_path):
        doc = {
            "class_names": ["a"],
            "graphs": [{"id": 0, "label": "zz", "wedges": []}],
        }
        with pytest.raises(SchemaViolation, match="unknown class 'zz'"):
            parse_json(self.write_doc(tmp_path, doc))

    def good_doc(self):
        return {
            "class_names": ["a"],
            "graphs": [
                {
                    "id": 0,
                    "label": "a",
                    "wedges": [
                        {
                            "glyph": "vertical",
                            "points": {
                                "depth": [0.0, 0.0],
                                "tail": [0.0, -1.0],
                                "right": [0.3, 0.2],
                                "left": [-0.3, 0.2],
                            },
                        }
                    ],
                }
            ],
        }

    def test_good_doc_parses(self, tmp_path):
        d = parse_json(self.write_doc(tmp_path, self.good_doc()))
        assert len(d) == 1 and not validate(d.graphs[0])

    def test_unknown_glyph(self, tmp_path):
        doc = self.good_doc()
        doc["graphs"][0]["wedges"][0]["glyph"] = "diagonal"
        with pytest.raises(SchemaViolation) as err:
            parse_json(self.write_doc(tmp_path, doc))
        assert err.value.json_path == "$.graphs[0].wedges[0].glyph"

    def test_missing_point(self, tmp_path):
        doc = self.good_doc()
        del doc["graphs"][0]["wedges"][0]["points"]["tail"]
        with pytest.raises(SchemaViolation, match=r"points\.tail: missing"):
            parse_json(self.write_doc(tmp_path, doc))

    def test_unknown_point_key(self, tmp_path):
        doc = self.good_doc()
        doc["graphs"][0]["wedges"][0]["points"]["middle"] = [0.0, 0.0]
        with pytest.raises(SchemaViolation, match="unknown keys"):
            parse_json(self.write_doc(tmp_path, doc))

    def test_coordinates_must_be_numbers(self, tmp_path):
        doc = self.good_doc()
        doc["graphs"][0]["wedges"][0]["points"]["depth"] = [0.0, True]
        with pytest.raises(SchemaViolation, match=r"depth\[1\]: expected a number"):
            parse_json(self.write_doc(tmp_path, doc))

    def test_coordinates_must_be_pairs(self, tmp_path):
        doc = self.good_doc()
        doc["graphs"][0]["wedges"][0]["points"]["left"] = [1.0]
        with pytest.raises(SchemaViolation, match=r"expected \[x, y\]"):
            parse_json(self.write_doc(tmp_path, doc))


class TestSynthesize:
    def test_counts_and_validity(self):
        d = synthesize(classes=3, per_class=4, wedge_range=(1, 3), seed=9)
        assert len(d) == 12 and len(d.class_names) == 3
        assert all(not validate(g) for g in d.graphs)
        assert all(1 <= g.n_wedges <= 3 for g in d.graphs)

    def test_same_seed_reproduces(self):
        a = synthesize(classes=2, per_class=3, seed=4)
        b = synthesize(classes=2, per_class=3, seed=4)
        assert a.graphs == b.graphs

    def test_seed_changes_geometry(self):
        a = synthesize(classes=2, per_class=3, seed=4)
        b = synthesize(classes=2, per_class=3, seed=5)
        assert a.graphs != b.graphs

    def test_zero_noise_repeats_prototype(self):
        d = synthesize(classes=1, per_class=3, seed=2, noise=0.0)
        p0 = d.graphs[0].positions
        assert all(np.allclose(g.positions, p0) for g in d.graphs)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            synthesize(classes=0, per_class=1)
        with pytest.raises(ValueError):
            synthesize(classes=1, per_class=1, wedge_range=(3, 2))
