"""Finite metric trees with integer edge lengths.

A :class:`MetricTree` is immutable after construction.  Construction runs one
traversal from the root and builds a binary-lifting table, so distance and
LCA queries are ``O(log n)`` and can be vectorized over arrays of vertex
pairs (:meth:`MetricTree.distance_many`).
"""

from __future__ import annotations

from collections import deque
from collections.abc import Hashable, Iterable, Sequence

import numpy as np

from .exceptions import LineError, TreeStructureError, UnknownVertexError
from .unionfind import UnionFind

__all__ = [
    "MetricTree",
    "TreeLine",
    "build_tree",
    "path_tree",
    "regular_tree",
    "tree_from_edges",
]


def _forest_path(adj, u, v):
    # BFS path u -> v in a partially built forest.
    prev = {u: None}
    queue = deque([u])
    while queue:
        a = queue.popleft()
        if a == v:
            break
        for b, _ in adj[a]:
            if b not in prev:
                prev[b] = a
                queue.append(b)
    path = [v]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


class MetricTree:
    """A finite tree with positive integer edge lengths.

    Parameters
    ----------
    n : int
        Number of vertices; ids are ``0 .. n-1``.
    edges : iterable of (u, v) or (u, v, length)
        Exactly ``n - 1`` edges.  Missing lengths default to 1.
    labels : sequence, optional
        Hashable display/lookup label per vertex.  Defaults to the ids.
    root : int
        Root used for the LCA structure.  Distances do not depend on it.

    Raises
    ------
    TreeStructureError
        If the edge list has a cycle (the offending cycle is attached as
        ``err.cycle``), is disconnected, or has invalid ids or lengths.
    """

    def __init__(self, n: int, edges: Iterable, labels: Sequence[Hashable] | None = None, root: int = 0):
        n = int(n)
        if n < 1:
            raise TreeStructureError("a tree needs at least one vertex")
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        edge_list = []
        uf = UnionFind(n)
        for e in edges:
            if len(e) == 2:
                u, v, w = int(e[0]), int(e[1]), 1
            elif len(e) == 3:
                u, v, w = int(e[0]), int(e[1]), e[2]
                if int(w) != w:
                    raise TreeStructureError(f"edge ({u}, {v}) has non-integer length {w!r}")
                w = int(w)
            else:
                raise TreeStructureError(f"malformed edge {e!r}")
            if not (0 <= u < n and 0 <= v < n):
                raise TreeStructureError(f"edge ({u}, {v}) references a vertex outside 0..{n - 1}")
            if u == v:
                raise TreeStructureError(f"self-loop at {u}", cycle=[u, u])
            if w < 1:
                raise TreeStructureError(f"edge ({u}, {v}) has length {w} < 1")
            if not uf.union(u, v):
                cycle = _forest_path(adj, u, v) + [u]
                raise TreeStructureError(f"edge ({u}, {v}) closes a cycle", cycle=cycle)
            adj[u].append((v, w))
            adj[v].append((u, w))
            edge_list.append((min(u, v), max(u, v), w))
        if len(edge_list) != n - 1:
            raise TreeStructureError(f"disconnected: {n} vertices but {len(edge_list)} edges")
        if not 0 <= root < n:
            raise UnknownVertexError(root)

        self.n = n
        self.root = int(root)
        self.edges: tuple[tuple[int, int, int], ...] = tuple(sorted(edge_list))
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)
        if labels is None:
            self.labels = tuple(range(n))
        else:
            if len(labels) != n:
                raise TreeStructureError("labels must have one entry per vertex")
            self.labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self._index) != n:
            raise TreeStructureError("labels must be distinct")
        self.unit = all(w == 1 for _, _, w in self.edges)
        self._build_lca()

    # ---------------------------------------------------------------- build

    def _build_lca(self):
        n = self.n
        parent = np.full(n, -1, dtype=np.int64)
        depth = np.zeros(n, dtype=np.int64)
        rdist = np.zeros(n, dtype=np.int64)
        order = [self.root]
        seen = np.zeros(n, dtype=bool)
        seen[self.root] = True
        for a in order:
            for b, w in self.adjacency[a]:
                if not seen[b]:
                    seen[b] = True
                    parent[b] = a
                    depth[b] = depth[a] + 1
                    rdist[b] = rdist[a] + w
                    order.append(b)
        self.parent = parent
        self.depth = depth
        self.root_distance = rdist
        self.order = np.asarray(order, dtype=np.int64)
        levels = max(1, int(depth.max()).bit_length())
        up = np.empty((levels, n), dtype=np.int64)
        up[0] = np.where(parent < 0, np.arange(n), parent)
        for k in range(1, levels):
            up[k] = up[k - 1][up[k - 1]]
        self._up = up
        for arr in (self.parent, self.depth, self.root_distance, self.order, self._up):
            arr.flags.writeable = False

    # -------------------------------------------------------------- lookups

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"MetricTree(n={self.n}, root={self.root})"

    def _check(self, a) -> int:
        a = int(a)
        if not 0 <= a < self.n:
            raise UnknownVertexError(a)
        return a

    def index(self, label) -> int:
        """Vertex id carrying ``label``."""
        try:
            return self._index[label]
        except KeyError:
            raise UnknownVertexError(label) from None

    def has_label(self, label) -> bool:
        return label in self._index

    def neighbors(self, a: int) -> list[int]:
        return [b for b, _ in self.adjacency[self._check(a)]]

    def degree(self, a: int) -> int:
        return len(self.adjacency[self._check(a)])

    # ------------------------------------------------------------ distances

    def lca_many(self, a, b) -> np.ndarray:
        a = np.array(a, dtype=np.int64, copy=True)
        b = np.array(b, dtype=np.int64, copy=True)
        if a.size and (a.min() < 0 or a.max() >= self.n or b.min() < 0 or b.max() >= self.n):
            raise UnknownVertexError("vertex id out of range")
        da, db = self.depth[a], self.depth[b]
        swap = da < db
        a[swap], b[swap] = b[swap], a[swap].copy()
        diff = np.abs(da - db)
        for k in range(self._up.shape[0]):
            bit = ((diff >> k) & 1).astype(bool)
            a[bit] = self._up[k][a[bit]]
        for k in range(self._up.shape[0] - 1, -1, -1):
            ua, ub = self._up[k][a], self._up[k][b]
            move = ua != ub
            a[move], b[move] = ua[move], ub[move]
        same = a == b
        return np.where(same, a, self._up[0][a])

    def lca(self, a: int, b: int) -> int:
        return int(self.lca_many([self._check(a)], [self._check(b)])[0])

    def distance_many(self, a, b) -> np.ndarray:
        """Vectorized exact distances for paired arrays of vertex ids."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        c = self.lca_many(a, b)
        return self.root_distance[a] + self.root_distance[b] - 2 * self.root_distance[c]

    def distance(self, a: int, b: int) -> int:
        a, b = self._check(a), self._check(b)
        return int(self.distance_many([a], [b])[0])

    def distances_from(self, a: int) -> np.ndarray:
        """All distances from ``a`` by a single traversal."""
        a = self._check(a)
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[a] = 0
        stack = [a]
        while stack:
            u = stack.pop()
            for v, w in self.adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + w
                    stack.append(v)
        return dist

    def geodesic(self, a: int, b: int) -> list[int]:
        """The unique simple path from ``a`` to ``b`` (inclusive)."""
        a, b = self._check(a), self._check(b)
        c = self.lca(a, b)
        left = [a]
        while left[-1] != c:
            left.append(int(self.parent[left[-1]]))
        right = [b]
        while right[-1] != c:
            right.append(int(self.parent[right[-1]]))
        return left + right[-2::-1]

    def is_connected_subset(self, subset) -> bool:
        s = {self._check(x) for x in subset}
        if not s:
            return False
        inner = sum(1 for u, v, _ in self.edges if u in s and v in s)
        return inner == len(s) - 1

    def project(self, subset, a: int) -> int:
        """Nearest-point projection of ``a`` onto a connected vertex subset.

        In a tree a connected subset is convex, so the first vertex of the
        subset met along any geodesic from ``a`` into it is the unique
        minimizer.
        """
        a = self._check(a)
        s = set(int(x) for x in subset)
        if not s:
            raise TreeStructureError("projection onto an empty subset")
        if not self.is_connected_subset(s):
            raise TreeStructureError("projection target is not connected")
        if a in s:
            return a
        target = min(s)
        for v in self.geodesic(a, target):
            if v in s:
                return v
        raise AssertionError("unreachable")  # pragma: no cover


def tree_from_edges(edges, n: int | None = None, labels=None, root: int = 0) -> MetricTree:
    edges = [tuple(e) for e in edges]
    if n is None:
        n = 1 + max((max(int(e[0]), int(e[1])) for e in edges), default=0)
    return MetricTree(n, edges, labels=labels, root=root)


def path_tree(n: int, start: int | None = None) -> MetricTree:
    """Path ``0 - 1 - ... - n-1``.  With ``start`` the labels run from ``start``."""
    if n < 1:
        raise TreeStructureError("path needs at least one vertex")
    labels = None if start is None else [start + i for i in range(n)]
    root = 0 if start is None else -start if 0 <= -start < n else 0
    return MetricTree(n, [(i, i + 1) for i in range(n - 1)], labels=labels, root=root)


def regular_words(valence: int, radius: int) -> list[tuple[int, ...]]:
    """Words (child-index tuples) of the radius-``radius`` ball, BFS order."""
    words = [()]
    frontier = [()]
    for depth in range(radius):
        nxt = []
        for w in frontier:
            branching = valence if depth == 0 else valence - 1
            nxt.extend(w + (c,) for c in range(branching))
        words.extend(nxt)
        frontier = nxt
    return words


def tree_from_words(words) -> MetricTree:
    """Rooted tree whose vertices are prefix-closed words; root is ``()``."""
    words = sorted(set(words), key=lambda w: (len(w), w))
    index = {w: i for i, w in enumerate(words)}
    if words[0] != ():
        raise TreeStructureError("word set must contain the empty word")
    edges = []
    for w in words[1:]:
        if w[:-1] not in index:
            raise TreeStructureError(f"word {w} has no parent in the set")
        edges.append((index[w[:-1]], index[w]))
    return MetricTree(len(words), edges, labels=words, root=0)


def regular_tree(valence: int, radius: int) -> MetricTree:
    """Ball of the given radius in the ``valence``-regular tree."""
    if valence < 2 or radius < 0:
        raise TreeStructureError("regular tree needs valence >= 2 and radius >= 0")
    return tree_from_words(regular_words(valence, radius))


def build_tree(spec) -> MetricTree:
    """Build a tree from a shape descriptor.

    ``{"kind": "path", "n": 3}``, ``{"kind": "regular", "valence": 3,
    "radius": 2}`` or ``{"kind": "edges", "edges": [[0, 1], [1, 2, 5]]}``.
    """
    kind = spec.get("kind")
    if kind == "path":
        return path_tree(int(spec["n"]))
    if kind == "regular":
        return regular_tree(int(spec["valence"]), int(spec["radius"]))
    if kind == "edges":
        edges = spec["edges"]
        if not edges:
            return MetricTree(1, [])
        return tree_from_edges(edges)
    raise TreeStructureError(f"unknown tree kind {kind!r}")


class TreeLine:
    """A geodesic parametrization ``[-R, R] -> host`` with constant speed.

    ``params[t + R]`` is the host vertex at parameter ``t``.  Consecutive
    parameters sit ``speed`` apart, and because the whole sequence is a
    geodesic, ``d(param(s), param(t)) == speed * |s - t|`` for every pair.
    """

    def __init__(self, host: MetricTree, params: Sequence[int], speed: int = 1, validate: bool = True):
        self.host = host
        self.params = np.asarray(params, dtype=np.int64)
        self.params.flags.writeable = False
        if self.params.size % 2 != 1:
            raise LineError("a line needs an odd number of parameters (symmetric window)")
        self.radius = (self.params.size - 1) // 2
        self.speed = int(speed)
        if self.speed < 1:
            raise LineError("speed must be a positive integer")
        self._inverse = {int(p): i - self.radius for i, p in enumerate(self.params)}
        if validate:
            self.check()

    def __repr__(self):
        return f"TreeLine(radius={self.radius}, speed={self.speed})"

    def __call__(self, t: int) -> int:
        return self.at(t)

    def at(self, t: int) -> int:
        if not -self.radius <= t <= self.radius:
            raise LineError(f"parameter {t} outside [-{self.radius}, {self.radius}]")
        return int(self.params[t + self.radius])

    def parameter_of(self, vertex: int):
        """Inverse of the parametrization, ``None`` if ``vertex`` is not a parameter point."""
        return self._inverse.get(int(vertex))

    def is_injective(self) -> bool:
        return len(self._inverse) == self.params.size

    def is_geodesic(self) -> bool:
        p = self.params
        if p.size == 1:
            return True
        steps = self.host.distance_many(p[:-1], p[1:])
        if np.any(steps != self.speed):
            return False
        return self.host.distance(int(p[0]), int(p[-1])) == self.speed * (p.size - 1)

    def check(self):
        if not self.is_injective():
            raise LineError("line parametrization is not injective")
        if not self.is_geodesic():
            raise LineError("line parametrization is not a constant-speed geodesic")

    def check_exhaustive(self) -> bool:
        """Compare every pair ``(s, t)`` against ``speed * |s - t|``."""
        p = self.params
        m = p.size
        s, t = np.triu_indices(m)
        return bool(np.all(self.host.distance_many(p[s], p[t]) == self.speed * (t - s)))

    def path_vertices(self) -> np.ndarray:
        """Every host vertex on the line, ``speed`` sub-steps per parameter step.

        Entry ``k`` sits at distance ``k`` from the start; parameter ``t``
        corresponds to entry ``speed * (t + R)``.
        """
        if self.speed == 1:
            return self.params
        out = [int(self.params[0])]
        for a, b in zip(self.params[:-1], self.params[1:]):
            out.extend(self.host.geodesic(int(a), int(b))[1:])
        return np.asarray(out, dtype=np.int64)
