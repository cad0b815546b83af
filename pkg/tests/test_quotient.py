import numpy as np
import pytest

from threetrees.config import fixture_names, load_config
from threetrees.exceptions import QuotientCycleError
from threetrees.generate import build_instance
from threetrees.quotient import build_quotient_tree, build_quotient_trees, incremental_treeness_trace

from _oracles import bfs_all, materialize_quotient


@pytest.fixture(scope="module")
def quotients_a(complex_a):
    return build_quotient_trees(complex_a)


def shadow(c, v, w):
    return c.pieces[v].lines[c.bs.edge_id(v, w)].shadow


class TestInstanceA:
    def test_equal_parameters_glue(self, complex_a, quotients_a):
        q1, _ = quotients_a
        s0, s2 = shadow(complex_a, 0, 1), shadow(complex_a, 2, 1)
        for t in range(-8, 9):
            assert q1.class_of(0, s0.at(t)) == q1.class_of(2, s2.at(t))
        assert q1.class_of(0, s0.at(5)) != q1.class_of(2, s2.at(4))

    def test_class_count(self, complex_a, quotients_a):
        q1, q2 = quotients_a
        window = 2 * 8 + 1
        assert q1.n_classes == complex_a.pieces[0].base.n + complex_a.pieces[2].base.n - window
        assert q2.n_classes == complex_a.pieces[1].base.n

    def test_class_sizes(self, complex_a, quotients_a):
        q1, _ = quotients_a
        glued = set(q1.classes_of(0, shadow(complex_a, 0, 1).params).tolist())
        sizes = q1.class_sizes()
        assert all(sizes[c] == 2 for c in glued)
        assert all(sizes[c] == 1 for c in range(q1.n_classes) if c not in glued)

    def test_image_intersection_is_glued_line(self, complex_a, quotients_a):
        q1, _ = quotients_a
        common = set(q1.piece_image(0).tolist()) & set(q1.piece_image(2).tolist())
        assert common == set(q1.classes_of(0, shadow(complex_a, 0, 1).params).tolist())

    def test_interior_distance_is_base_distance(self, complex_a, quotients_a):
        q1, _ = quotients_a
        base = complex_a.pieces[0].base
        rng = np.random.default_rng(0)
        for a, b in rng.integers(0, base.n, size=(100, 2)).tolist():
            assert q1.distance(q1.class_of(0, a), q1.class_of(0, b)) == base.distance(a, b)

    def test_trace_single_step(self, complex_a):
        trace = incremental_treeness_trace(complex_a, 1)
        assert [s.added_piece for s in trace] == [0, 2]
        assert len(trace[1].glued) == 1 and all(s.acyclic for s in trace)


@pytest.mark.parametrize("name", ["instance_a", "instance_b", "seven_pieces", "pants_path"])
def test_matches_materialized_quotient(name):
    _, c = build_instance(load_config(name))
    for q in build_quotient_trees(c):
        adj, uf = materialize_quotient(c, q.parity)
        cls = {}
        for v in q.pieces:
            for b in range(c.pieces[v].base.n):
                cls.setdefault(uf.find((v, b)), set()).add(q.class_of(v, b))
        # same partition
        assert all(len(s) == 1 for s in cls.values()) and len(cls) == q.n_classes
        root = {k: next(iter(s)) for k, s in cls.items()}
        for src in list(adj)[:: max(1, len(adj) // 10)]:
            ref = bfs_all(adj, src)
            assert len(ref) == len(adj)
            for node, d in ref.items():
                assert q.distance(root[src], root[node]) == d
        assert all(q.image_is_isometric(v) for v in q.pieces)


def test_single_piece():
    _, c = build_instance(load_config("single_piece"))
    q1, q2 = build_quotient_trees(c)
    assert q1.n_classes == c.pieces[0].base.n and q1.image_is_isometric(0)
    assert q2.empty and q2.n_classes == 0
    assert incremental_treeness_trace(c, 2) == []


def test_seven_piece_trace():
    _, c = build_instance(load_config("seven_pieces"))
    trace = incremental_treeness_trace(c, 1)
    assert len(trace) == 5 and len(trace) - 1 >= 3
    assert all(s.acyclic for s in trace)
    assert trace[-1].n_classes == build_quotient_tree(c, 1).n_classes


def test_parity_separation(complex_b):
    for q in build_quotient_trees(complex_b):
        assert all(complex_b.bs.parity[v] == q.parity for v in q.pieces)
        assert sorted(q.pieces) == complex_b.bs.class_members(q.parity)


@pytest.mark.parametrize("name", [n for n in fixture_names() if not n.startswith("negative")])
def test_fixtures_are_trees(name):
    _, c = build_instance(load_config(name))
    for q in build_quotient_trees(c):
        assert all(s.acyclic for s in incremental_treeness_trace(c, q.parity))


def test_cycle_detected_on_broken_shadow():
    _, c = build_instance(load_config("negative_broken_shadow"))
    with pytest.raises(QuotientCycleError) as err:
        build_quotient_tree(c, 1)
    assert err.value.cycle
    with pytest.raises(QuotientCycleError):
        incremental_treeness_trace(c, 1)
