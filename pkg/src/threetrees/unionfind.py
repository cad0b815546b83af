"""Array-backed union-find with path halving and union by size."""

from __future__ import annotations

import numpy as np


class UnionFind:
    def __init__(self, n: int):
        self.n = int(n)
        self.parent = list(range(self.n))
        self.size = [1] * self.n
        self.merges = 0

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        """Merge the classes of ``i`` and ``j``; False if already merged."""
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        self.merges += 1
        return True

    def connected(self, i: int, j: int) -> bool:
        return self.find(i) == self.find(j)

    def roots(self) -> np.ndarray:
        return np.fromiter((self.find(i) for i in range(self.n)), dtype=np.int64, count=self.n)

    def canonical_min(self) -> np.ndarray:
        """Smallest member of each element's class, per element."""
        roots = self.roots()
        best = np.full(self.n, self.n, dtype=np.int64)
        np.minimum.at(best, roots, np.arange(self.n, dtype=np.int64))
        return best[roots]
