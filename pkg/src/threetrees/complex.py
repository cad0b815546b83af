"""The truncated tree of spaces as one finite graph.

Each piece ``X_v = F_v x [-R_z, R_z]`` contributes a copy of its surface graph
at every fiber level plus unit vertical edges.  Adjacent pieces are glued by
the flip rule ``(v, Line(e, t), u) == (w, Line(e, u), t)``.  Identified
descriptions are merged with union-find; the canonical vertex of a class is
its lexicographically smallest description ``(piece, point index, z)``.

Raw ids enumerate descriptions in exactly that lexicographic order, so the
canonical representative of a class is simply its smallest raw id.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    IdentificationError,
    MissingLineError,
    OutOfWindowError,
    TruncationError,
    UnknownVertexError,
    UnreachableError,
)
from .pieces import Line, Piece, PieceVertex
from .search import CSRGraph, bfs_pair, bidirectional_bfs, multi_source_reach
from .trees import MetricTree
from .unionfind import UnionFind

__all__ = [
    "BassSerreTree",
    "ComplexVertex",
    "TotalComplex",
    "DoublingReport",
    "build_complex",
    "flip_image",
    "complex_distance",
    "pair_distances",
    "sample_core_points",
    "sample_core_pairs",
    "doubling_check",
    "measure_rho",
]


class BassSerreTree:
    """The tree ``T0`` with unit edges, edge ids and the parity 2-colouring.

    Edge ids index ``tree.edges`` (sorted ``(u, v)`` with ``u < v``).  The
    root's class is parity 1.  ``truncated`` marks trees cut out of a larger
    (infinite) shape, whose leaves are truncation artifacts.
    """

    def __init__(self, tree: MetricTree, truncated: bool = False):
        if not tree.unit:
            raise ValueError("Bass-Serre tree must have unit edge lengths")
        self.tree = tree
        self.truncated = bool(truncated)
        self.edges = tuple((u, v) for u, v, _ in tree.edges)
        self._edge_id = {e: i for i, e in enumerate(self.edges)}
        self.parity = np.where(tree.depth % 2 == 0, 1, 2).astype(np.int64)
        self.parity.flags.writeable = False

    @property
    def n(self) -> int:
        return self.tree.n

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self._edge_id[(min(u, v), max(u, v))]
        except KeyError:
            raise UnknownVertexError((u, v)) from None

    def incident_edges(self, v: int) -> list[int]:
        return sorted(self.edge_id(v, w) for w in self.tree.neighbors(v))

    def other_end(self, e: int, v: int) -> int:
        a, b = self.edges[e]
        if v == a:
            return b
        if v == b:
            return a
        raise UnknownVertexError((e, v))

    def class_members(self, i: int) -> list[int]:
        return [int(v) for v in np.flatnonzero(self.parity == i)]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if self.tree.degree(v) <= 1 and self.n > 1]

    def recolor(self) -> np.ndarray:
        """Independent 2-colouring by BFS, used to audit ``parity``."""
        color = np.zeros(self.n, dtype=np.int64)
        color[0] = 1
        queue = [0]
        for a in queue:
            for b in self.tree.neighbors(a):
                if color[b] == 0:
                    color[b] = 3 - color[a]
                    queue.append(b)
        if color[self.tree.root] != 1:
            color = 3 - color
        return color


class ComplexVertex(NamedTuple):
    piece: int
    point: PieceVertex
    z: int


@dataclass
class TotalComplex:
    """Finite model of the universal cover; immutable after :func:`build_complex`."""

    bs: BassSerreTree
    pieces: dict
    fiber_radius: int
    graph: CSRGraph
    offsets: np.ndarray  # raw id offset per piece, plus total at the end
    canon: np.ndarray  # raw id -> canonical id
    rep: np.ndarray  # canonical id -> representative raw id
    partner: np.ndarray  # raw id -> identified raw id, or -1
    build_log: dict
    mu: int = 1
    lip: int = 1
    rho: int | None = None
    radii: tuple = ()
    _members: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def levels(self) -> int:
        return 2 * self.fiber_radius + 1

    # ------------------------------------------------------------ raw ids

    def raw_id(self, v: int, idx, z) -> np.ndarray:
        return self.offsets[v] + np.asarray(idx, dtype=np.int64) * self.levels + np.asarray(z) + self.fiber_radius

    def raw_piece(self, raw) -> np.ndarray:
        return np.searchsorted(self.offsets, np.asarray(raw), side="right") - 1

    def decode_raw(self, raw: int) -> tuple[int, int, int]:
        """``(piece, point index, z)`` of a raw id."""
        raw = int(raw)
        v = int(self.raw_piece(raw))
        local = raw - int(self.offsets[v])
        idx, zi = divmod(local, self.levels)
        return v, idx, zi - self.fiber_radius

    def describe_raw(self, raw: int) -> ComplexVertex:
        v, idx, z = self.decode_raw(raw)
        return ComplexVertex(v, self.pieces[v].point(idx), z)

    # ------------------------------------------------------ public lookups

    def id_of(self, x: ComplexVertex) -> int:
        """Canonical id of a description; raises if it is outside the window."""
        v, pv, z = x
        if v not in self.pieces or not -self.fiber_radius <= z <= self.fiber_radius:
            raise UnknownVertexError(x)
        idx = self.pieces[v].index(pv)
        return int(self.canon[self.raw_id(v, idx, z)])

    def describe(self, x: int) -> ComplexVertex:
        """Representative (lexicographically smallest) description."""
        return self.describe_raw(int(self.rep[self._check(x)]))

    def representations(self, x: int) -> list[ComplexVertex]:
        raw = int(self.rep[self._check(x)])
        out = [self.describe_raw(raw)]
        if self.partner[raw] >= 0:
            out.append(self.describe_raw(int(self.partner[raw])))
        return out

    def _check(self, x) -> int:
        x = int(x)
        if not 0 <= x < self.n:
            raise UnknownVertexError(x)
        return x

    def members(self, v: int) -> np.ndarray:
        """Canonical ids of all vertices of ``X_v`` (glued ones included)."""
        if v not in self._members:
            lo, hi = int(self.offsets[v]), int(self.offsets[v + 1])
            self._members[v] = np.unique(self.canon[lo:hi])
        return self._members[v]

    def pieces_of(self, x: int) -> list[int]:
        return sorted({r.piece for r in self.representations(x)})

    def distance(self, x: int, y: int, method: str = "auto") -> int:
        return complex_distance(self, x, y, method=method)

    def edge_list(self):
        """``(u, v, w)`` arrays with ``u < v``."""
        g = self.graph
        src = np.repeat(np.arange(g.n), np.diff(g.indptr))
        keep = src < g.indices
        return src[keep], g.indices[keep], g.weights[keep]


def flip_image(c: TotalComplex, x: ComplexVertex, edge: int | None = None) -> ComplexVertex:
    """Image of a boundary-plane point under the flip gluing.

    ``(v, Line(e, t), u)`` maps to ``(w, Line(e, u), t)`` where ``w`` is the
    other end of Bass-Serre edge ``e``.
    """
    v, pv, u = x
    if not isinstance(pv, Line) or pv.key < 0:
        raise ValueError(f"{x} is not on a glued boundary plane")
    e = pv.key
    if edge is not None and edge != e:
        raise ValueError(f"{x} is not on the plane of edge {edge}")
    if e >= len(c.bs.edges):
        raise ValueError(f"{x} is not on a glued boundary plane")
    w = c.bs.other_end(e, v)
    line_w = c.pieces[w].lines.get(e)
    if line_w is None:
        raise MissingLineError(f"piece {w} has no line for edge {e}")
    if abs(u) > line_w.radius or abs(pv.t) > c.fiber_radius:
        raise OutOfWindowError(f"flip image of {x} is outside piece {w}'s window")
    return ComplexVertex(w, Line(e, u), pv.t)


def build_complex(bs: BassSerreTree, pieces: dict, fiber_radius: int, radii=()) -> TotalComplex:
    """Glue the pieces over ``bs`` into one graph.

    Raises
    ------
    MissingLineError
        A Bass-Serre edge lacks a boundary line at one of its ends.
    IdentificationError
        A raw description is identified twice (generator bug).
    """
    R = int(fiber_radius)
    Z = 2 * R + 1
    for v in range(bs.n):
        if v not in pieces:
            raise MissingLineError(f"no piece for Bass-Serre vertex {v}")
    sizes = np.array([pieces[v].n_points * Z for v in range(bs.n)], dtype=np.int64)
    offsets = np.zeros(bs.n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    n_raw = int(offsets[-1])

    def raw(v, idx, z):
        return offsets[v] + idx * Z + z + R

    # flip identifications
    pairs_a, pairs_b = [], []
    log_edges = []
    for e, (v, w) in enumerate(bs.edges):
        pv, pw = pieces[v], pieces[w]
        if e not in pv.lines:
            raise MissingLineError(f"piece {v} has no boundary line for edge {e}")
        if e not in pw.lines:
            raise MissingLineError(f"piece {w} has no boundary line for edge {e}")
        rv, rw = pv.lines[e].radius, pw.lines[e].radius
        ts = np.arange(-min(rv, R), min(rv, R) + 1)
        us = np.arange(-min(rw, R), min(rw, R) + 1)
        T, U = np.meshgrid(ts, us, indexing="ij")
        T, U = T.ravel(), U.ravel()
        a = raw(v, pv.line_index(e, T), U)
        b = raw(w, pw.line_index(e, U), T)
        pairs_a.append(a)
        pairs_b.append(b)
        plane_v = (2 * rv + 1) * Z
        log_edges.append({
            "edge": e, "pieces": [v, w], "identified": int(a.size),
            "skipped_out_of_window": int(plane_v - a.size),
        })
    a = np.concatenate(pairs_a) if pairs_a else np.empty(0, dtype=np.int64)
    b = np.concatenate(pairs_b) if pairs_b else np.empty(0, dtype=np.int64)

    partner = np.full(n_raw, -1, dtype=np.int64)
    touched = np.concatenate([a, b])
    if np.unique(touched).size != touched.size:
        raise IdentificationError("a description takes part in two flip identifications")
    partner[a] = b
    partner[b] = a
    uf = UnionFind(n_raw)
    for x, y in zip(a.tolist(), b.tolist()):
        if not uf.union(x, y):
            raise IdentificationError(f"raw vertices {x} and {y} already identified")
    rep_of_raw = uf.canonical_min()
    # consistency: every identified pair resolves to one class, partner of partner is self
    if not (np.array_equal(rep_of_raw[a], rep_of_raw[b]) and np.array_equal(partner[partner[a]], a)):
        raise IdentificationError("flip identification is inconsistent")
    rep = np.flatnonzero(rep_of_raw == np.arange(n_raw))
    canon = np.searchsorted(rep, rep_of_raw)

    # edges: horizontal copies of each surface graph plus vertical fibers
    us, vs, ws = [], [], []
    zs = np.arange(-R, R + 1)
    for v in range(bs.n):
        p, q, w = pieces[v].edge_arrays()
        us.append(raw(v, p[:, None], zs[None, :]).ravel())
        vs.append(raw(v, q[:, None], zs[None, :]).ravel())
        ws.append(np.repeat(w, Z))
        pts = np.arange(pieces[v].n_points)
        lo = raw(v, pts[:, None], zs[None, :-1]).ravel()
        us.append(lo)
        vs.append(lo + 1)
        ws.append(np.ones(lo.size, dtype=np.int64))
    eu = canon[np.concatenate(us)]
    ev = canon[np.concatenate(vs)]
    ew = np.concatenate(ws)
    lo_, hi_ = np.minimum(eu, ev), np.maximum(eu, ev)
    if np.any(lo_ == hi_):
        raise IdentificationError("an identification collapsed an edge")
    n = int(rep.size)
    key = lo_ * n + hi_
    order = np.lexsort((ew, key))
    key, ew = key[order], ew[order]
    first = np.ones(key.size, dtype=bool)
    first[1:] = key[1:] != key[:-1]
    key, ew = key[first], ew[first]
    graph = CSRGraph(n, key // n, key % n, ew)

    mu = max(p.mu for p in pieces.values())
    lip = max(p.lip for p in pieces.values())
    log = {
        "pieces": [
            {"piece": v, "points": pieces[v].n_points, "raw_vertices": int(sizes[v]),
             "parity": int(bs.parity[v])}
            for v in range(bs.n)
        ],
        "fiber_radius": R,
        "raw_vertices": n_raw,
        "identified_pairs": int(a.size),
        "union_merges": uf.merges,
        "canonical_vertices": n,
        "edges": int(key.size),
        "duplicate_edges_removed": int(first.size - first.sum()),
        "flip_edges": log_edges,
    }
    return TotalComplex(
        bs=bs, pieces=pieces, fiber_radius=R, graph=graph, offsets=offsets,
        canon=canon, rep=rep, partner=partner, build_log=log, mu=mu, lip=lip,
        radii=tuple(radii),
    )


def complex_distance(c: TotalComplex, x: int, y: int, method: str = "auto") -> int:
    """Exact distance in the truncated complex.

    ``method`` is ``"bfs"``, ``"bidirectional"``, ``"dijkstra"`` or
    ``"auto"`` (BFS on unit-weight graphs, Dijkstra otherwise).
    """
    x, y = c._check(x), c._check(y)
    g = c.graph
    if method == "auto":
        method = "bfs" if g.unit else "dijkstra"
    if method in ("bfs", "bidirectional") and not g.unit:
        raise ValueError(f"{method} requires unit edge weights")
    if method == "bfs":
        return bfs_pair(g, x, y)
    if method == "bidirectional":
        return bidirectional_bfs(g, x, y)
    if method == "dijkstra":
        from scipy.sparse.csgraph import dijkstra

        d = dijkstra(g.as_scipy(), directed=False, indices=x)[y]
        if np.isinf(d):
            raise UnreachableError(f"{y} unreachable from {x}")
        return int(d)
    raise ValueError(f"unknown method {method!r}")


def pair_distances(c: TotalComplex, pairs, workers: int = 1) -> np.ndarray:
    """Distances for many pairs, one single-source search per distinct source.

    Unreachable pairs come back as ``-1``.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.full(len(pairs), -1, dtype=np.int64)
    sources = np.unique(pairs[:, 0])

    def run(s):
        rows = np.flatnonzero(pairs[:, 0] == s)
        d = c.graph.distances_from(int(s))
        return rows, d[pairs[rows, 1]]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, sources))
    else:
        results = [run(s) for s in sources]
    for rows, d in results:
        out[rows] = d
    return out


# ------------------------------------------------------------ truncation

def _point_inset(piece: Piece) -> np.ndarray:
    """How far each point of the piece sits inside its truncation radii."""
    r_base = piece.radii[0] if piece.radii else int(piece.base.depth.max())
    inset = np.full(piece.n_points, -1, dtype=np.int64)
    inset[:piece.base.n] = r_base - piece.base.depth
    for key, line in piece.lines.items():
        ts = np.arange(-line.radius, line.radius + 1)
        depth_in = line.radius - np.abs(ts)
        inset[piece.line_index(key, ts)] = depth_in
        params = line.shadow.params
        inset[params] = np.maximum(inset[params], depth_in)
    return inset


def core_mask(c: TotalComplex, margin: int) -> np.ndarray:
    """Canonical ids whose every description is ``margin`` inside all radii."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    raw_ok = np.zeros(int(c.offsets[-1]), dtype=bool)
    zs = np.arange(-c.fiber_radius, c.fiber_radius + 1)
    leaves = set(c.bs.leaves()) if c.bs.truncated else set()
    for v, piece in c.pieces.items():
        if v in leaves:
            continue
        # fiber levels must also sit inside the neighbours' line windows towards v
        reach = min([c.fiber_radius] + [c.pieces[u].lines[c.bs.edge_id(u, v)].radius
                                        for u in c.bs.tree.neighbors(v)])
        z_ok = (reach - np.abs(zs)) >= margin
        p_ok = _point_inset(piece) >= margin
        lo, hi = int(c.offsets[v]), int(c.offsets[v + 1])
        raw_ok[lo:hi] = (p_ok[:, None] & z_ok[None, :]).ravel()
    both = raw_ok.copy()
    glued = c.partner >= 0
    both[glued] &= raw_ok[c.partner[glued]]
    return both[c.rep]


def sample_core_points(c: TotalComplex, margin: int, count: int, seed) -> np.ndarray:
    """Seeded sample of safe-core vertices (sorted, without replacement when possible)."""
    ids = np.flatnonzero(core_mask(c, margin))
    if ids.size == 0:
        raise TruncationError(f"empty safe core at margin {margin}")
    rng = np.random.default_rng(seed)
    replace = count > ids.size
    return np.sort(rng.choice(ids, size=count, replace=replace))


def sample_core_pairs(c: TotalComplex, margin: int, n_pairs: int, seed, per_source: int = 10) -> np.ndarray:
    """Seeded pairs of core vertices grouped so that few searches serve many pairs."""
    n_src = max(1, -(-n_pairs // per_source))
    rng = np.random.default_rng(seed)
    ids = np.flatnonzero(core_mask(c, margin))
    if ids.size == 0:
        raise TruncationError(f"empty safe core at margin {margin}")
    src = rng.choice(ids, size=n_src, replace=n_src > ids.size)
    tgt = rng.choice(ids, size=n_pairs, replace=n_pairs > ids.size)
    return np.column_stack([np.repeat(src, per_source)[:n_pairs], tgt])


@dataclass
class DoublingReport:
    pairs: np.ndarray
    d_small: np.ndarray
    d_big: np.ndarray

    @property
    def agree(self) -> np.ndarray:
        return (self.d_small == self.d_big) & (self.d_small >= 0)

    @property
    def inflated(self) -> np.ndarray:
        return np.flatnonzero(self.d_small > self.d_big)

    @property
    def shrink_violations(self) -> int:
        """Pairs where the larger window gave a longer distance (must be 0)."""
        return int(np.sum((self.d_small >= 0) & (self.d_small < self.d_big)))

    @property
    def disagreement_fraction(self) -> float:
        return float(1 - self.agree.mean()) if len(self.pairs) else 0.0

    def agreeing_pairs(self) -> np.ndarray:
        return self.pairs[self.agree]


def translate(c: TotalComplex, c_big: TotalComplex, ids) -> np.ndarray:
    """Map canonical ids of ``c`` to those of ``c_big`` through descriptions."""
    out = np.empty(len(ids), dtype=np.int64)
    for k, x in enumerate(ids):
        try:
            out[k] = c_big.id_of(c.describe(int(x)))
        except (UnknownVertexError, KeyError) as err:
            raise TruncationError(f"vertex {x} not representable in the larger complex") from err
    return out


def doubling_check(c: TotalComplex, c_big: TotalComplex, pairs, workers: int = 1) -> DoublingReport:
    """Compare distances against a complex built with larger radii."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    flat = np.unique(pairs)
    mapped = dict(zip(flat.tolist(), translate(c, c_big, flat).tolist()))
    big_pairs = np.vectorize(mapped.__getitem__, otypes=[np.int64])(pairs) if len(pairs) else pairs
    d_small = pair_distances(c, pairs, workers=workers)
    d_big = pair_distances(c_big, big_pairs, workers=workers)
    return DoublingReport(pairs=pairs, d_small=d_small, d_big=d_big)


def measure_rho(c: TotalComplex) -> int | None:
    """Smallest distance between ``X_v`` and ``X_v'`` over ``d_T0(v, v') = 2``.

    Exact on the truncation, so an upper bound for the untruncated infimum.
    ``None`` when ``T0`` has no such pair.  The value is stored on ``c``.
    """
    best = None
    tree = c.bs.tree
    for w in range(c.bs.n):
        nbrs = tree.neighbors(w)
        for i, v in enumerate(nbrs):
            for v2 in nbrs[i + 1:]:
                d = multi_source_reach(c.graph, c.members(v), c.members(v2))
                best = d if best is None else min(best, d)
    c.rho = best
    return best
