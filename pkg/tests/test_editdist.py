"""Edit-distance cost model, assignment heuristics, and the exact solver."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wedgekit.editdist import (
    CostModel,
    DistanceMatrix,
    SizeBoundExceeded,
    apx1,
    apx2,
    apx_matrices,
    arrangement_sub_cost,
    cross_apx_matrices,
    distance_matrix,
    edit_path_cost,
    exact,
    vertex_sub_cost,
    wedge_sub_cost,
)
from wedgekit.graph import GlyphType, PointType, build_from_wedges

D = 1000.0
ALPHA = 1000.0


def wedge_at(x, y, glyph=GlyphType.VERTICAL, spread=1.0):
    return (
        glyph,
        {
            PointType.DEPTH: (x, y),
            PointType.TAIL: (x, y - spread),
            PointType.RIGHT: (x + 0.3 * spread, y + 0.2 * spread),
            PointType.LEFT: (x - 0.3 * spread, y + 0.2 * spread),
        },
    )


def sign(*sites, glyphs=None, gid=0):
    glyphs = glyphs or [GlyphType.VERTICAL] * len(sites)
    return build_from_wedges(
        [wedge_at(x, y, g) for (x, y), g in zip(sites, glyphs)], graph_id=gid
    )


def exhaustive_exact(g, h, cm=CostModel()):
    """Minimum edit-path cost by enumerating every injective mapping."""
    w1, w2 = g.n_wedges, h.n_wedges
    best = np.inf
    for targets in itertools.product(range(-1, w2), repeat=w1):
        taken = [t for t in targets if t >= 0]
        if len(set(taken)) != len(taken):
            continue
        best = min(best, edit_path_cost(g, h, list(targets), cm))
    return best


class TestCostModel:
    def test_defaults(self):
        cm = CostModel()
        assert (cm.alpha, cm.del_cost) == (1000.0, 1000.0)

    def test_rejects_negative_parameters(self):
        with pytest.raises(ValueError):
            CostModel(alpha=-1.0)

    def test_vertex_sub_squared_distance(self):
        g = sign((0, 0), gid=0)
        h = sign((3, 4), gid=1)
        assert vertex_sub_cost(g.vertices[0], h.vertices[0]) == 25.0

    def test_vertex_sub_infinite_on_label_mismatch(self):
        g = sign((0, 0), glyphs=[GlyphType.VERTICAL])
        h = sign((0, 0), glyphs=[GlyphType.HORIZONTAL])
        assert vertex_sub_cost(g.vertices[0], h.vertices[0]) == np.inf
        # point-type mismatch within one glyph
        assert vertex_sub_cost(g.vertices[0], g.vertices[1]) == np.inf

    def test_wedge_sub_identical_is_zero(self):
        g = sign((1, 2))
        assert wedge_sub_cost(g, 0, g, 0) == 0.0

    def test_wedge_sub_sums_four_point_distances(self):
        g = sign((0, 0))
        h = sign((1, 0))
        assert wedge_sub_cost(g, 0, h, 0) == pytest.approx(4.0)

    def test_wedge_sub_infinite_across_glyphs(self):
        g = sign((0, 0), glyphs=[GlyphType.VERTICAL])
        h = sign((0, 0), glyphs=[GlyphType.WINKELHAKEN])
        assert wedge_sub_cost(g, 0, h, 0) == np.inf

    def test_arrangement_cosine_landmarks(self):
        assert arrangement_sub_cost((1, 0), (2, 0)) == 0.0
        assert arrangement_sub_cost((1, 0), (0, 3)) == pytest.approx(ALPHA)
        assert arrangement_sub_cost((1, 0), (-1, 0)) == pytest.approx(2 * ALPHA)

    def test_arrangement_zero_vectors(self):
        assert arrangement_sub_cost((0, 0), (0, 0)) == 0.0
        assert arrangement_sub_cost((0, 0), (1, 0)) == pytest.approx(ALPHA)


class TestHeuristics:
    def test_identical_graphs_have_zero_distance(self):
        g = sign((0, 0), (4, 1), (2, 5))
        assert apx1(g, g) == 0.0
        total, path = apx2(g, g)
        assert total == 0.0
        assert list(path.mapping) == [0, 1, 2]

    def test_single_wedge_unit_offset_costs_four(self):
        g = sign((0, 0))
        h = sign((1, 0), gid=1)
        assert apx1(g, h) == pytest.approx(4.0)
        assert apx2(g, h)[0] == pytest.approx(4.0)

    def test_right_angle_arrangement_costs_two_alpha(self):
        """Two wedges whose relative direction turns 90 degrees: both
        directed arrangement pairs pay alpha once."""
        g = sign((0, 0), (6, 0))
        h = sign((0, 0), (0, 6), gid=1)
        total, path = apx2(g, h)
        # identity mapping; wedge 2 travels (-6, 6), squared 72 per vertex
        assert path.sub_cost == pytest.approx(4 * 72.0)
        assert path.arr_sub_cost == pytest.approx(2 * ALPHA)
        assert total == pytest.approx(path.sub_cost + 2 * ALPHA)

    def test_alpha_scales_arrangement_term_only(self):
        g = sign((0, 0), (6, 0))
        h = sign((0, 0), (0, 6), gid=1)
        base = apx2(g, h)[1]
        doubled = apx2(g, h, CostModel(alpha=2 * ALPHA))[1]
        assert doubled.arr_sub_cost == pytest.approx(2 * base.arr_sub_cost)
        assert doubled.sub_cost == pytest.approx(base.sub_cost)

    def test_unmatchable_wedge_costs_deletion_plus_arrangement(self):
        """One extra far wedge in h: 16D for its vertices plus D per
        directed arrangement edge it brings in (2 here, one other wedge)."""
        g = sign((0, 0))
        h = sign((0, 0), (40, 40), gid=1)
        total, path = apx2(g, h)
        assert total == pytest.approx(16 * D + 2 * D)
        assert path.ins_cost == pytest.approx(18 * D)
        assert path.sub_cost == 0.0

    def test_glyph_mismatch_forces_delete_insert(self):
        g = sign((0, 0), glyphs=[GlyphType.VERTICAL])
        h = sign((0, 0), glyphs=[GlyphType.HORIZONTAL], gid=1)
        total, path = apx2(g, h)
        assert total == pytest.approx(32 * D)
        assert list(path.mapping) == [-1]

    def test_apx1_never_exceeds_apx2(self, corpus):
        rng = np.random.default_rng(11)
        idx = rng.choice(len(corpus.graphs), 40, replace=False)
        for i in idx[:20]:
            for j in idx[20:]:
                g, h = corpus.graphs[i], corpus.graphs[j]
                assert apx1(g, h) <= apx2(g, h)[0] + 1e-9

    def test_apx2_breakdown_sums_to_total(self, corpus):
        g, h = corpus.graphs[3], corpus.graphs[40]
        total, p = apx2(g, h)
        assert total == pytest.approx(
            p.sub_cost + p.arr_sub_cost + p.del_cost + p.ins_cost
        )
        assert edit_path_cost(g, h, p.mapping) == pytest.approx(total)


class TestExact:
    wedges = st.integers(1, 3)

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_exact_matches_exhaustive_enumeration(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
        w1 = data.draw(self.wedges)
        w2 = data.draw(self.wedges)
        glyphs = list(GlyphType)
        g = sign(
            *[tuple(p) for p in rng.uniform(0, 8, (w1, 2))],
            glyphs=[glyphs[int(i)] for i in rng.integers(0, 3, w1)],
        )
        h = sign(
            *[tuple(p) for p in rng.uniform(0, 8, (w2, 2))],
            glyphs=[glyphs[int(i)] for i in rng.integers(0, 3, w2)],
            gid=1,
        )
        got, path = exact(g, h)
        assert got == pytest.approx(exhaustive_exact(g, h), rel=1e-12, abs=1e-9)
        assert edit_path_cost(g, h, path.mapping) == pytest.approx(got)

    def test_exact_never_exceeds_apx2(self, corpus):
        small = [g for g in corpus.graphs if g.n_wedges <= 4][:12]
        for g in small[:6]:
            for h in small[6:]:
                e, _ = exact(g, h)
                a, _ = apx2(g, h)
                assert e <= a + 1e-9

    def test_exact_beats_apx2_somewhere(self, corpus):
        small = [g for g in corpus.graphs if g.n_wedges <= 5][:30]
        diffs = []
        for g, h in itertools.combinations(small, 2):
            diffs.append(apx2(g, h)[0] - exact(g, h)[0])
        assert max(diffs) > 1.0

    def test_size_bound_names_both_graphs(self):
        g = sign(*[(i, 0) for i in range(11)], gid=5)
        h = sign(*[(i, 1) for i in range(11)], gid=9)
        with pytest.raises(SizeBoundExceeded, match=r"5.*9|9.*5"):
            exact(g, h)
        d = exact(g, h, max_total_wedges=22)[0]
        assert np.isfinite(d)


class TestRigidMotion:
    def test_common_rotation_translation_preserves_distances(self, corpus):
        """Applying one rigid motion to both graphs leaves all three
        distances unchanged to 1e-9 relative."""
        g, h = corpus.graphs[10], corpus.graphs[55]
        theta = 0.77
        rot = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        shift = np.array([13.0, -4.5])

        def move(x):
            return x.with_positions(x.positions @ rot.T + shift)

        for fn in (apx1, lambda a, b: apx2(a, b)[0]):
            before = fn(g, h)
            after = fn(move(g), move(h))
            assert after == pytest.approx(before, rel=1e-9)

    def test_exact_rigid_motion(self, corpus):
        small = [x for x in corpus.graphs if x.n_wedges <= 4]
        g, h = small[0], small[-1]
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])

        def move(x):
            return x.with_positions(x.positions @ rot.T - 2.0)

        assert exact(move(g), move(h))[0] == pytest.approx(exact(g, h)[0], rel=1e-9)


class TestMatrices:
    def test_square_diagonal_is_zero(self, corpus_apx):
        dm1, dm2 = corpus_apx
        assert np.all(np.diag(dm1.values) == 0.0)
        assert np.all(np.diag(dm2.values) == 0.0)

    def test_apx1_lower_bounds_apx2_entrywise(self, corpus_apx):
        dm1, dm2 = corpus_apx
        assert np.all(dm1.values <= dm2.values + 1e-9)

    def test_apx1_symmetric_apx2_not_required(self, corpus_apx):
        dm1, dm2 = corpus_apx
        assert dm1.symmetric
        assert np.allclose(dm1.values, dm1.values.T)
        assert not dm2.symmetric

    def test_cross_block_matches_square_slices(self, corpus):
        rows = list(corpus.graphs[5:15])
        cols = list(corpus.graphs[100:130])
        a1, a2 = cross_apx_matrices(rows, cols)
        dm1, dm2 = apx_matrices(rows + cols)
        assert np.array_equal(a1, dm1.values[:10, 10:])
        assert np.array_equal(a2, dm2.values[:10, 10:])

    def test_pairwise_functions_agree_with_matrix(self, corpus):
        graphs = list(corpus.graphs[:8])
        dm1, dm2 = apx_matrices(graphs)
        for i in (0, 3):
            for j in (5, 7):
                assert apx1(graphs[i], graphs[j]) == pytest.approx(dm1.values[i, j])
                assert apx2(graphs[i], graphs[j])[0] == pytest.approx(dm2.values[i, j])

    def test_exact_matrix_on_small_signs(self, corpus):
        graphs = [g for g in corpus.graphs if g.n_wedges <= 4][:8]
        dm = distance_matrix(graphs, "EXACT")
        for i in (0, 2):
            for j in (4, 6):
                assert dm.values[i, j] == pytest.approx(
                    exact(graphs[i], graphs[j])[0]
                )

    def test_distance_matrix_rejects_unknown_method(self, corpus):
        with pytest.raises(ValueError, match="method"):
            distance_matrix(corpus.graphs[:4], "APPROX")

    def test_exact_matrix_size_bound_names_pair(self):
        graphs = [
            sign(*[(i, 0) for i in range(12)], gid=41),
            sign((0, 0), gid=7),
            sign(*[(i, 1) for i in range(11)], gid=23),
        ]
        with pytest.raises(SizeBoundExceeded) as err:
            distance_matrix(graphs, "EXACT", max_total_wedges=20)
        assert "41" in str(err.value)
        assert "23" in str(err.value)

    def test_serialization_round_trip(self, corpus, tmp_path):
        dm1, _ = apx_matrices(list(corpus.graphs[:6]), CostModel(alpha=700.0))
        path = tmp_path / "m.json"
        dm1.to_json(path)
        back = DistanceMatrix.from_json(path)
        assert back.method == dm1.method
        assert back.graph_ids == dm1.graph_ids
        assert back.cost_model == dm1.cost_model
        assert np.array_equal(back.values, dm1.values)

    def test_csv_has_header_and_rows(self, corpus, tmp_path):
        dm1, _ = apx_matrices(list(corpus.graphs[:3]))
        path = tmp_path / "m.csv"
        dm1.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 4
        assert lines[0].startswith("id,")
