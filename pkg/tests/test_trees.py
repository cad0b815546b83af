import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threetrees.exceptions import LineError, TreeStructureError, UnknownVertexError
from threetrees.trees import (
    MetricTree,
    TreeLine,
    build_tree,
    path_tree,
    regular_tree,
)
from threetrees.unionfind import UnionFind

from _oracles import floyd_warshall


def random_tree(rng, n, max_w=1):
    edges = [(int(rng.integers(i)), i, int(rng.integers(1, max_w + 1))) for i in range(1, n)]
    perm = rng.permutation(n)
    return MetricTree(n, [(int(perm[u]), int(perm[v]), w) for u, v, w in edges])


@st.composite
def trees(draw, max_n=30, max_w=4):
    n = draw(st.integers(1, max_n))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    weights = [draw(st.integers(1, max_w)) for _ in range(1, n)]
    return MetricTree(n, [(p, i, w) for i, (p, w) in enumerate(zip(parents, weights), start=1)])


class TestConstruction:
    def test_path3(self):
        t = build_tree({"kind": "path", "n": 3})
        assert t.n == 3
        assert [e[:2] for e in t.edges] == [(0, 1), (1, 2)]

    def test_regular_3_2_has_10_vertices(self):
        assert regular_tree(3, 2).n == 1 + 3 + 6

    def test_explicit_edges(self):
        t = build_tree({"kind": "edges", "edges": [[0, 1], [1, 2], [0, 3]]})
        assert t.n == 4 and t.degree(0) == 2

    def test_cycle_reports_offending_cycle(self):
        with pytest.raises(TreeStructureError) as err:
            MetricTree(3, [(0, 1), (1, 2), (2, 0)])
        assert set(err.value.cycle) == {0, 1, 2}

    def test_disconnected(self):
        with pytest.raises(TreeStructureError, match="disconnected"):
            MetricTree(4, [(0, 1), (2, 3)])

    @pytest.mark.parametrize("edges", [[(0, 1, 0)], [(0, 1, 1.5)], [(0, 5)], [(1, 1)]])
    def test_bad_edges(self, edges):
        with pytest.raises(TreeStructureError):
            MetricTree(2, edges)

    def test_unknown_vertex(self):
        with pytest.raises(UnknownVertexError):
            path_tree(3).distance(0, 7)

    def test_labels(self):
        t = path_tree(9, start=-4)
        assert t.index(-4) == 0 and t.labels[t.root] == 0


class TestDistance:
    def test_path(self):
        t = path_tree(3)
        assert t.distance(0, 2) == 2
        assert t.distance(1, 1) == 0

    def test_matches_floyd_warshall(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            t = random_tree(rng, 50, max_w=5)
            fw = floyd_warshall(t.n, t.edges)
            a, b = np.triu_indices(t.n)
            assert np.array_equal(t.distance_many(a, b), fw[a, b])
            assert np.array_equal(t.distances_from(7), fw[7])

    @settings(max_examples=60, deadline=None)
    @given(trees(), st.data())
    def test_metric_and_four_point(self, t, data):
        idx = st.integers(0, t.n - 1)
        x, y, z, w = (data.draw(idx) for _ in range(4))
        d = t.distance
        assert d(x, y) == d(y, x) >= 0
        assert (d(x, y) == 0) == (x == y)
        assert d(x, z) <= d(x, y) + d(y, z)
        # four-point condition: the two largest of the three pair sums agree
        sums = sorted([d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)])
        assert sums[1] == sums[2]


class TestGeodesic:
    def test_examples(self):
        t = path_tree(3)
        assert t.geodesic(0, 2) == [0, 1, 2]
        assert t.geodesic(1, 1) == [1]

    def test_length_matches_distance(self):
        rng = np.random.default_rng(1)
        t = random_tree(rng, 80, max_w=3)
        weight = {(u, v): w for u, v, w in t.edges}
        for a, b in rng.integers(0, t.n, size=(200, 2)).tolist():
            g = t.geodesic(a, b)
            assert g[0] == a and g[-1] == b
            assert sum(weight[min(p, q), max(p, q)] for p, q in zip(g, g[1:])) == t.distance(a, b)


class TestProjection:
    def test_examples(self):
        t = path_tree(5)
        assert t.project({0, 1}, 4) == 1
        assert t.project({0, 1}, 0) == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            t = random_tree(rng, 40)
            # a connected subset: a ball around a random centre
            centre, r = int(rng.integers(t.n)), int(rng.integers(0, 3))
            s = set(np.flatnonzero(t.distances_from(centre) <= r).tolist())
            for a in range(t.n):
                d = {x: t.distance(a, x) for x in s}
                best = min(d.values())
                argmins = [x for x in s if d[x] == best]
                assert len(argmins) == 1
                assert t.project(s, a) == argmins[0]

    def test_rejects_disconnected_target(self):
        with pytest.raises(TreeStructureError):
            path_tree(5).project({0, 4}, 2)


class TestTreeLine:
    def test_geodesic_line(self):
        t = path_tree(9, start=-4)
        line = TreeLine(t, [t.index(s) for s in range(-3, 4)])
        assert line.radius == 3 and line.at(2) == t.index(2)
        assert line.parameter_of(t.index(-1)) == -1
        assert line.check_exhaustive()

    def test_rejects_non_geodesic(self):
        t = path_tree(5)
        with pytest.raises(LineError):
            TreeLine(t, [0, 1, 0])
        with pytest.raises(LineError):
            TreeLine(t, [0, 2, 1])

    def test_speed_two(self):
        t = path_tree(9)
        line = TreeLine(t, [0, 2, 4, 6, 8], speed=2)
        assert line.check_exhaustive()
        assert line.path_vertices().tolist() == list(range(9))

    def test_out_of_window(self):
        t = path_tree(3)
        with pytest.raises(LineError):
            TreeLine(t, [0, 1, 2]).at(2)


def test_unionfind_canonical_min():
    uf = UnionFind(6)
    uf.union(4, 2)
    uf.union(2, 5)
    assert not uf.union(5, 4)
    assert uf.canonical_min().tolist() == [0, 1, 2, 3, 2, 2]
    assert uf.merges == 2
