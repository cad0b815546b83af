"""The quotient trees ``T1`` and ``T2``.

``T_i`` is the disjoint union of the base trees of all parity-``i`` pieces,
with shadow lines glued across every opposite-parity piece ``w``: for two
neighbours ``v, v'`` of ``w``, the shadow of ``v``'s line towards ``w`` at
parameter ``t`` is identified with the shadow of ``v'``'s line at the same
``t``.  Union-find closes the relation transitively.

Lines of speed ``s > 1`` are glued along their full geodesic, sub-step by
sub-step, which keeps the images isometric.  Both lines of a glued pair must
then share the same speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import TotalComplex
from .exceptions import PieceError, QuotientCycleError, TreeStructureError, UnknownVertexError
from .trees import MetricTree
from .unionfind import UnionFind

__all__ = [
    "QuotientTree",
    "TraceStep",
    "build_quotient_tree",
    "build_quotient_trees",
    "incremental_treeness_trace",
]


def glue_window(c: TotalComplex, v: int, v2: int, w: int) -> int:
    """Largest ``W`` such that parameters ``|t| <= W`` are glued between ``v`` and ``v2``."""
    e, e2 = c.bs.edge_id(v, w), c.bs.edge_id(v2, w)
    return min(c.pieces[v].lines[e].radius, c.pieces[v2].lines[e2].radius, c.fiber_radius)


def _glued_positions(c: TotalComplex, v: int, w: int, window: int) -> np.ndarray:
    """Base vertices of ``v``'s shadow towards ``w`` over ``|t| <= window``, all sub-steps."""
    shadow = c.pieces[v].lines[c.bs.edge_id(v, w)].shadow
    path = shadow.path_vertices()
    s = shadow.speed
    return path[s * (shadow.radius - window): s * (shadow.radius + window) + 1]


def _gluings(c: TotalComplex, members: set):
    """Neighbour pairs ``(w, v, v2)`` to glue, ``v < v2`` both in ``members``."""
    out = []
    for w in range(c.bs.n):
        if w in members:
            continue
        nbrs = [v for v in c.bs.tree.neighbors(w) if v in members]
        for i, v in enumerate(nbrs):
            for v2 in nbrs[i + 1:]:
                out.append((w, v, v2))
    return out


@dataclass
class QuotientTree:
    """``T_i`` materialized as a metric tree over equivalence classes.

    Class ids are dense and ordered by their canonical representative,
    the lexicographically smallest ``(piece, base vertex)`` in the class.
    """

    parity: int
    pieces: list
    node_offsets: dict
    node_class: np.ndarray  # flattened (piece, base vertex) -> class id
    class_rep: np.ndarray  # class id -> flattened node of representative
    tree: MetricTree | None
    bases: dict = field(default_factory=dict, repr=False)
    gluing_log: list = field(default_factory=list)
    _owner: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        owner = np.empty(len(self.node_class), dtype=np.int64)
        for v in self.pieces:
            lo = self.node_offsets[v]
            owner[lo:lo + self._size(v)] = v
        self._owner = owner

    def _size(self, v):
        idx = self.pieces.index(v)
        hi = self.node_offsets[self.pieces[idx + 1]] if idx + 1 < len(self.pieces) else len(self.node_class)
        return hi - self.node_offsets[v]

    @property
    def n_classes(self) -> int:
        return int(self.class_rep.size)

    @property
    def empty(self) -> bool:
        return self.tree is None

    def class_of(self, v: int, b) -> int:
        """Class of base vertex id ``b`` of piece ``v``."""
        if v not in self.node_offsets:
            raise ValueError(f"piece {v} is not in parity class {self.parity}")
        b = int(b)
        if not 0 <= b < self._size(v):
            raise UnknownVertexError((v, b))
        return int(self.node_class[self.node_offsets[v] + b])

    def classes_of(self, v: int, b) -> np.ndarray:
        if v not in self.node_offsets:
            raise ValueError(f"piece {v} is not in parity class {self.parity}")
        return self.node_class[self.node_offsets[v] + np.asarray(b, dtype=np.int64)]

    def representative(self, cls: int) -> tuple[int, int]:
        node = int(self.class_rep[cls])
        v = int(self._owner[node])
        return v, node - self.node_offsets[v]

    def members(self, cls: int) -> list[tuple[int, int]]:
        nodes = np.flatnonzero(self.node_class == cls)
        return [(int(self._owner[x]), int(x - self.node_offsets[int(self._owner[x])])) for x in nodes]

    def member_in(self, cls: int, v: int):
        """Base vertex of piece ``v`` in class ``cls``, or ``None``."""
        lo = self.node_offsets[v]
        hits = np.flatnonzero(self.node_class[lo:lo + self._size(v)] == cls)
        return int(hits[0]) if hits.size else None

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.node_class, minlength=self.n_classes)

    def distance(self, c1: int, c2: int) -> int:
        if self.tree is None:
            raise UnknownVertexError("empty quotient tree")
        return self.tree.distance(c1, c2)

    def distance_many(self, a, b) -> np.ndarray:
        if self.tree is None:
            if np.size(a):
                raise UnknownVertexError("empty quotient tree")
            return np.empty(0, dtype=np.int64)
        return self.tree.distance_many(a, b)

    def piece_image(self, v: int) -> np.ndarray:
        """Sorted class ids met by the image of ``T_v``."""
        lo = self.node_offsets[v]
        return np.unique(self.node_class[lo:lo + self._size(v)])

    def image_is_isometric(self, v: int) -> bool:
        """Exhaustive check that ``T_v`` embeds isometrically (hence convexly)."""
        base = self.tree_of(v)
        s, t = np.triu_indices(base.n, k=1)
        cls = self.classes_of(v, np.arange(base.n))
        return bool(np.array_equal(self.tree.distance_many(cls[s], cls[t]), base.distance_many(s, t)))

    def tree_of(self, v: int) -> MetricTree:
        return self.bases[v]


def _class_graph(node_class, n_classes, pieces, offsets, bases):
    edges = {}
    for v in pieces:
        for a, b, w in bases[v].edges:
            ca, cb = int(node_class[offsets[v] + a]), int(node_class[offsets[v] + b])
            if ca == cb:
                raise QuotientCycleError(f"edge ({a}, {b}) of piece {v} collapsed to a loop", cycle=[ca, ca])
            key = (min(ca, cb), max(ca, cb))
            if key in edges and edges[key] != w:
                raise QuotientCycleError(f"classes {key} joined by edges of lengths {edges[key]} and {w}",
                                         cycle=[key[0], key[1], key[0]])
            edges[key] = w
    try:
        return MetricTree(n_classes, [(a, b, w) for (a, b), w in sorted(edges.items())])
    except QuotientCycleError:
        raise
    except TreeStructureError as err:
        if err.cycle is not None:
            raise QuotientCycleError(f"quotient graph has a cycle: {err}", cycle=err.cycle) from err
        raise


def build_quotient_tree(c: TotalComplex, parity: int) -> QuotientTree:
    """Build and certify ``T_parity``.

    Raises
    ------
    QuotientCycleError
        If the glued graph is not a tree.
    """
    pieces = c.bs.class_members(parity)
    offsets, total = {}, 0
    for v in pieces:
        offsets[v] = total
        total += c.pieces[v].base.n
    bases = {v: c.pieces[v].base for v in pieces}
    uf = UnionFind(total)
    log = []
    for w, v, v2 in _gluings(c, set(pieces)):
        window = glue_window(c, v, v2, w)
        sa = c.pieces[v].lines[c.bs.edge_id(v, w)].shadow
        sb = c.pieces[v2].lines[c.bs.edge_id(v2, w)].shadow
        if sa.speed != sb.speed:
            raise PieceError(f"lines of pieces {v} and {v2} towards {w} have speeds {sa.speed} != {sb.speed}")
        pa = _glued_positions(c, v, w, window) + offsets[v]
        pb = _glued_positions(c, v2, w, window) + offsets[v2]
        merges = sum(uf.union(int(x), int(y)) for x, y in zip(pa, pb))
        log.append({"via": w, "pieces": [v, v2], "window": window, "merges": merges})
    if total == 0:
        return QuotientTree(parity, pieces, offsets, np.empty(0, np.int64), np.empty(0, np.int64), None,
                            bases, log)
    reps = uf.canonical_min()
    class_rep = np.flatnonzero(reps == np.arange(total))
    node_class = np.searchsorted(class_rep, reps)
    tree = _class_graph(node_class, class_rep.size, pieces, offsets, bases)
    return QuotientTree(parity, pieces, offsets, node_class, class_rep, tree, bases, log)


def build_quotient_trees(c: TotalComplex) -> tuple[QuotientTree, QuotientTree]:
    return build_quotient_tree(c, 1), build_quotient_tree(c, 2)


@dataclass
class TraceStep:
    step: int
    added_piece: int
    glued: list
    class_merges: int
    n_classes: int
    n_edges: int
    acyclic: bool


def incremental_treeness_trace(c: TotalComplex, parity: int) -> list[TraceStep]:
    """Replay the construction of ``T_parity`` one member tree at a time.

    Trees are added in breadth-first order of the distance-2 graph on the
    parity class; each addition glues the new tree's lines to the trees
    already present.  Acyclicity is asserted after every step.

    Raises
    ------
    QuotientCycleError
        At the first step whose union is not a forest.
    """
    pieces = c.bs.class_members(parity)
    if not pieces:
        return []
    members = set(pieces)
    gluings = _gluings(c, members)
    order, seen = [pieces[0]], {pieces[0]}
    for v in order:
        nxt = sorted({b for w, a, b in gluings if a == v} | {a for w, a, b in gluings if b == v})
        for u in nxt:
            if u not in seen:
                seen.add(u)
                order.append(u)
    order += [v for v in pieces if v not in seen]

    offsets, total = {}, 0
    for v in pieces:
        offsets[v] = total
        total += c.pieces[v].base.n
    uf = UnionFind(total)
    present: list[int] = []
    trace = []
    for step, v in enumerate(order):
        present.append(v)
        glued, merges = [], 0
        for w, a, b in gluings:
            if v not in (a, b) or (b if a == v else a) not in present:
                continue
            window = glue_window(c, a, b, w)
            pa = _glued_positions(c, a, w, window) + offsets[a]
            pb = _glued_positions(c, b, w, window) + offsets[b]
            merges += sum(uf.union(int(x), int(y)) for x, y in zip(pa, pb))
            glued.append((w, a, b, window))
        nodes = np.concatenate([np.arange(offsets[u], offsets[u] + c.pieces[u].base.n) for u in present])
        roots = np.fromiter((uf.find(int(x)) for x in nodes), dtype=np.int64, count=nodes.size)
        classes = np.unique(roots)
        cls = {int(r): i for i, r in enumerate(classes)}
        edges = set()
        for u in present:
            for x, y, _ in c.pieces[u].base.edges:
                a, b = cls[uf.find(offsets[u] + x)], cls[uf.find(offsets[u] + y)]
                edges.add((min(a, b), max(a, b)))
        forest = UnionFind(classes.size)
        cycle_edge = next(((a, b) for a, b in sorted(edges) if not forest.union(a, b)), None)
        acyclic = cycle_edge is None
        trace.append(TraceStep(step, v, glued, merges, int(classes.size), len(edges), acyclic))
        if not acyclic:
            raise QuotientCycleError(f"union is not a tree after step {step} (added piece {v})",
                                     cycle=list(cycle_edge))
    return trace
