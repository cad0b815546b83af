"""Exact shortest paths on a CSR graph.

Unit-weight graphs use a level-synchronous breadth-first search whose frontier
expansion is vectorized with numpy; weighted graphs fall back to
``scipy.sparse.csgraph.dijkstra``.  All functions take the raw CSR arrays so
they can be shared across threads without copying.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .exceptions import UnreachableError

__all__ = [
    "CSRGraph",
    "bfs_levels",
    "bfs_pair",
    "bidirectional_bfs",
    "multi_source_reach",
]


class CSRGraph:
    """Undirected graph on ``0..n-1`` in compressed sparse row form."""

    def __init__(self, n: int, u, v, w=None):
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.ones(u.size, dtype=np.int64) if w is None else np.asarray(w, dtype=np.int64)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        ww = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        self.n = int(n)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=self.indptr[1:])
        self.indices = dst
        self.weights = ww
        self.unit = bool(ww.size == 0 or np.all(ww == 1))
        self.n_edges = int(u.size)
        self._scipy = None

    def neighbors(self, a: int) -> np.ndarray:
        return self.indices[self.indptr[a]:self.indptr[a + 1]]

    def edge_weight(self, a: int, b: int):
        """Weight of edge ``a-b`` or ``None`` if not adjacent."""
        lo, hi = self.indptr[a], self.indptr[a + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], b)
        if k < hi and self.indices[k] == b:
            return int(self.weights[k])
        return None

    def expand(self, frontier: np.ndarray) -> np.ndarray:
        """All neighbours of a frontier, with repetition."""
        starts = self.indptr[frontier]
        counts = self.indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        shift = np.repeat(starts - np.cumsum(counts) + counts, counts)
        return self.indices[shift + np.arange(total)]

    def as_scipy(self):
        if self._scipy is None:
            self._scipy = csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))
        return self._scipy

    def distances_from(self, source: int) -> np.ndarray:
        """Distances to every vertex; ``-1`` marks unreachable vertices."""
        if self.unit:
            return bfs_levels(self, source)
        d = dijkstra(self.as_scipy(), directed=False, indices=int(source))
        out = np.where(np.isinf(d), -1, d).astype(np.int64)
        return out


def bfs_levels(g: CSRGraph, source: int, target: int | None = None) -> np.ndarray:
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        if target is not None and dist[target] >= 0:
            break
        nbrs = g.expand(frontier)
        nbrs = nbrs[dist[nbrs] < 0]
        if nbrs.size == 0:
            break
        nbrs = np.unique(nbrs)
        level += 1
        dist[nbrs] = level
        frontier = nbrs
    return dist


def bfs_pair(g: CSRGraph, a: int, b: int) -> int:
    if a == b:
        return 0
    d = int(bfs_levels(g, a, target=b)[b])
    if d < 0:
        raise UnreachableError(f"{b} unreachable from {a}")
    return d


def bidirectional_bfs(g: CSRGraph, a: int, b: int) -> int:
    """Unit-weight distance by alternating full-level expansions from both ends."""
    if a == b:
        return 0
    dist = [np.full(g.n, -1, dtype=np.int64), np.full(g.n, -1, dtype=np.int64)]
    dist[0][a] = 0
    dist[1][b] = 0
    frontier = [np.array([a], dtype=np.int64), np.array([b], dtype=np.int64)]
    level = [0, 0]
    while frontier[0].size and frontier[1].size:
        side = 0 if frontier[0].size <= frontier[1].size else 1
        mine, other = dist[side], dist[1 - side]
        nbrs = g.expand(frontier[side])
        nbrs = np.unique(nbrs[mine[nbrs] < 0])
        level[side] += 1
        mine[nbrs] = level[side]
        frontier[side] = nbrs
        met = nbrs[other[nbrs] >= 0]
        if met.size:
            both = (dist[0] >= 0) & (dist[1] >= 0)
            return int(np.min(dist[0][both] + dist[1][both]))
    raise UnreachableError(f"{b} unreachable from {a}")


def multi_source_reach(g: CSRGraph, sources: np.ndarray, targets: np.ndarray) -> int:
    """Distance from a source set to a target set (unit weights)."""
    if not g.unit:
        d = dijkstra(g.as_scipy(), directed=False, indices=np.asarray(sources), min_only=True)
        best = d[np.asarray(targets)].min()
        if np.isinf(best):
            raise UnreachableError("target set unreachable")
        return int(best)
    seen = np.zeros(g.n, dtype=bool)
    is_target = np.zeros(g.n, dtype=bool)
    is_target[targets] = True
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    seen[frontier] = True
    level = 0
    while frontier.size:
        if is_target[frontier].any():
            return level
        nbrs = g.expand(frontier)
        nbrs = np.unique(nbrs[~seen[nbrs]])
        seen[nbrs] = True
        frontier = nbrs
        level += 1
    raise UnreachableError("target set unreachable")
