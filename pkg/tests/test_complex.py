import dataclasses

import numpy as np
import pytest

from threetrees import load_config
from threetrees.complex import (
    BassSerreTree,
    ComplexVertex,
    build_complex,
    complex_distance,
    core_mask,
    doubling_check,
    flip_image,
    measure_rho,
    pair_distances,
    sample_core_pairs,
    sample_core_points,
)
from threetrees.exceptions import MissingLineError, OutOfWindowError, TruncationError, UnknownVertexError
from threetrees.generate import build_instance
from threetrees.pieces import Base, Line, make_synthetic_piece
from threetrees.trees import MetricTree, TreeLine, path_tree, tree_from_edges

from _oracles import bfs_all, materialize_complex


def single_path_piece(R=4):
    base = path_tree(2 * R + 1, start=-R)
    line = TreeLine(base, [base.index(t) for t in range(-R, R + 1)])
    piece = make_synthetic_piece(base, [], {-1: line}, radii=(R, R))
    return build_complex(BassSerreTree(MetricTree(1, [])), {0: piece}, R, radii=(R, R, R))


class TestBuild:
    def test_single_piece_count(self):
        c = single_path_piece()
        assert c.n == 18 * 9 == 162
        assert c.build_log["identified_pairs"] == 0

    def test_instance_a_identification_count(self, complex_a):
        log = complex_a.build_log
        raw = sum(p["raw_vertices"] for p in log["pieces"])
        assert log["identified_pairs"] == sum(e["identified"] for e in log["flip_edges"])
        # each flipped pair removes exactly one vertex
        assert complex_a.n == raw - log["identified_pairs"] == raw - log["union_merges"]

    def test_missing_line(self):
        with pytest.raises(MissingLineError):
            build_instance(load_config("negative_missing_gluing"))

    def test_bipartition(self, complex_b):
        bs = complex_b.bs
        d = np.array([[bs.tree.distance(u, v) for v in range(bs.n)] for u in range(bs.n)])
        same = bs.parity[:, None] == bs.parity[None, :]
        assert np.all(d[same] % 2 == 0) and np.all(d[~same] % 2 == 1)
        assert np.array_equal(bs.recolor(), bs.parity)


class TestFlip:
    def test_examples(self, complex_a):
        c = complex_a
        v, w = c.bs.edges[0]
        assert flip_image(c, ComplexVertex(v, Line(0, 3), 5)) == ComplexVertex(w, Line(0, 5), 3)
        assert flip_image(c, ComplexVertex(v, Line(0, 0), 0)) == ComplexVertex(w, Line(0, 0), 0)

    def test_involution_and_same_vertex(self, complex_a):
        c = complex_a
        glued = np.flatnonzero(c.partner >= 0)
        for raw in glued.tolist():
            x = c.describe_raw(raw)
            y = flip_image(c, x)
            assert flip_image(c, y) == x
            assert c.id_of(x) == c.id_of(y)
            assert c.distance(c.id_of(x), c.id_of(y)) == 0

    def test_rejects_non_boundary(self, complex_a):
        with pytest.raises(ValueError):
            flip_image(complex_a, ComplexVertex(0, Base(()), 0))

    def test_out_of_window(self):
        cfg = load_config("instance_a")
        cfg = dataclasses.replace(cfg, radii={"base": 3, "line": 8, "fiber": 4})
        _, c = build_instance(cfg)
        with pytest.raises(OutOfWindowError):
            flip_image(c, ComplexVertex(0, Line(0, 6), 1))


class TestDistance:
    def test_within_piece_example(self):
        c = single_path_piece()
        x = c.id_of(ComplexVertex(0, Base(0), 0))
        y = c.id_of(ComplexVertex(0, Base(3), 2))
        assert c.distance(x, y) == 5
        assert c.distance(x, x) == 0

    def test_within_piece_matches_naive(self):
        c = single_path_piece()
        adj, uf = materialize_complex(c.bs, c.pieces, c.fiber_radius)
        src = (0, Base(0), 0)
        ref = bfs_all(adj, uf.find(src))
        ours = c.graph.distances_from(c.id_of(ComplexVertex(*src)))
        for node, d in ref.items():
            assert ours[c.id_of(ComplexVertex(*node))] == d

    def test_bfs_bidirectional_dijkstra_agree(self, complex_b):
        rng = np.random.default_rng(3)
        for x, y in rng.integers(0, complex_b.n, size=(500, 2)).tolist():
            d = complex_distance(complex_b, x, y, "bfs")
            assert complex_distance(complex_b, x, y, "bidirectional") == d
        for x, y in rng.integers(0, complex_b.n, size=(20, 2)).tolist():
            assert complex_distance(complex_b, x, y, "dijkstra") == complex_distance(complex_b, x, y, "bfs")

    def test_pair_distances_parallel(self, complex_a):
        pairs = sample_core_pairs(complex_a, 1, 100, seed=0)
        assert np.array_equal(pair_distances(complex_a, pairs), pair_distances(complex_a, pairs, workers=4))

    def test_metric_properties(self, complex_a):
        rng = np.random.default_rng(4)
        for x, y, z in rng.integers(0, complex_a.n, size=(50, 3)).tolist():
            dxy, dyz, dxz = (complex_a.distance(a, b) for a, b in ((x, y), (y, z), (x, z)))
            assert dxy == complex_a.distance(y, x)
            assert dxz <= dxy + dyz

    def test_vertical_translation(self):
        c = single_path_piece()
        rng = np.random.default_rng(5)
        pts = [Base(b) for b in range(-4, 5)] + [Line(-1, t) for t in range(-4, 5)]
        for _ in range(50):
            p, q = (pts[i] for i in rng.integers(len(pts), size=2))
            z = int(rng.integers(-3, 3))
            d0 = c.distance(c.id_of(ComplexVertex(0, p, z)), c.id_of(ComplexVertex(0, q, z)))
            d1 = c.distance(c.id_of(ComplexVertex(0, p, z + 1)), c.id_of(ComplexVertex(0, q, z + 1)))
            assert d0 == d1

    def test_unknown_vertex(self, complex_a):
        with pytest.raises(UnknownVertexError):
            complex_a.distance(0, complex_a.n)

    def test_weighted_graph_uses_dijkstra(self):
        base = tree_from_edges([(0, 1, 2), (1, 2, 2)])
        line = TreeLine(base, [0, 1, 2], speed=2)
        piece = make_synthetic_piece(base, [], {-1: line})
        c = build_complex(BassSerreTree(MetricTree(1, [])), {0: piece}, 1)
        a, b = c.id_of(ComplexVertex(0, Base(0), 0)), c.id_of(ComplexVertex(0, Base(2), 0))
        assert c.distance(a, b) == 4
        with pytest.raises(ValueError):
            complex_distance(c, a, b, "bfs")


class TestCore:
    def test_margin_zero_admits_everything(self, complex_a):
        assert core_mask(complex_a, 0).all()

    def test_margin_full_radius(self):
        c = single_path_piece()
        ids = np.flatnonzero(core_mask(c, 4))
        descs = [c.describe(int(x)) for x in ids]
        assert descs and all(d.z == 0 for d in descs)
        assert {c.pieces[0].retract(d.point) for d in descs} == {Base(0)}

    def test_sampling_is_deterministic(self, complex_a):
        a = sample_core_points(complex_a, 2, 50, seed=9)
        b = sample_core_points(complex_a, 2, 50, seed=9)
        assert np.array_equal(a, b)
        assert np.array_equal(sample_core_pairs(complex_a, 2, 40, 1), sample_core_pairs(complex_a, 2, 40, 1))

    def test_empty_core(self, complex_a):
        with pytest.raises(TruncationError):
            sample_core_points(complex_a, 50, 5, seed=0)


class TestDoubling:
    def test_identical_radii(self, complex_a):
        pairs = sample_core_pairs(complex_a, 2, 100, seed=2)
        rep = doubling_check(complex_a, complex_a, pairs)
        assert rep.disagreement_fraction == 0.0 and rep.shrink_violations == 0

    def test_larger_window_never_longer(self, complex_a):
        cfg = load_config("instance_a")
        _, big = build_instance(cfg.scaled(1.5))
        pairs = sample_core_pairs(complex_a, 0, 300, seed=3)
        rep = doubling_check(complex_a, big, pairs)
        assert rep.shrink_violations == 0
        assert np.all(rep.d_big <= rep.d_small)

    def test_interior_pair_agrees(self, complex_a):
        cfg = load_config("instance_a")
        _, big = build_instance(cfg.scaled(2))
        x = complex_a.id_of(ComplexVertex(1, Base(()), 0))
        y = complex_a.id_of(ComplexVertex(1, Base((0,)), 1))
        assert doubling_check(complex_a, big, [[x, y]]).agree.all()


def test_rho_is_two(complex_a, complex_b):
    assert measure_rho(complex_a) == 2
    assert measure_rho(complex_b) == 2
