"""Models of the surface factor of a Seifert piece.

A :class:`Piece` is a finite graph made of a base tree plus boundary lines.
Each boundary line is a path of unit edges, and every line vertex is joined by a
tether of length ``mu`` to its shadow in the base tree.  The retraction sends a
line vertex to its shadow and fixes the base tree.

Point indices inside a piece are dense: base vertices first (base ids), then
each boundary line in increasing key order, parameter ascending.  This order
is the lexicographic order used for canonical representatives downstream.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .exceptions import LineError, PieceError, UnknownVertexError
from .trees import MetricTree, TreeLine, tree_from_words

__all__ = [
    "Base",
    "Line",
    "BoundaryLine",
    "Piece",
    "PieceAxiomReport",
    "make_synthetic_piece",
    "make_pants_piece",
    "cayley_ball",
    "retract",
    "verify_piece_axioms",
]


class Base(NamedTuple):
    """A point of the base tree, named by its radius-independent label."""

    label: object


class Line(NamedTuple):
    """Parameter ``t`` on the boundary line with key ``key``."""

    key: int
    t: int


PieceVertex = Union[Base, Line]


@dataclass(frozen=True)
class BoundaryLine:
    """A boundary line of a piece and its shadow ``r o gamma`` in the base tree.

    ``key`` is the incident Bass-Serre edge id; negative keys mark free
    boundary lines that are never glued.
    """

    key: int
    shadow: TreeLine

    @property
    def radius(self) -> int:
        return self.shadow.radius

    def gamma(self, t: int) -> Line:
        if not -self.radius <= t <= self.radius:
            raise LineError(f"parameter {t} outside line window {self.radius}")
        return Line(self.key, t)


@dataclass
class Piece:
    """Finite model of one surface factor.

    Attributes
    ----------
    base : MetricTree
        The base tree, image of the retraction.
    lines : dict[int, BoundaryLine]
    mu : int
        Tether length; bounds the displacement of the retraction.
    lip : int
        Declared Lipschitz constant of the retraction.
    radii : tuple[int, int]
        ``(R_base, R_line)`` the piece was truncated at.
    kind : str
    """

    base: MetricTree
    lines: dict
    mu: int = 1
    lip: int = 1
    radii: tuple = (0, 0)
    kind: str = "synthetic"
    _offsets: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.lines = {k: self.lines[k] for k in sorted(self.lines)}
        offset = self.base.n
        self._offsets = {}
        for key, line in self.lines.items():
            self._offsets[key] = offset
            offset += 2 * line.radius + 1
        self.n_points = offset
        retract_idx = np.arange(self.n_points, dtype=np.int64)
        for key, line in self.lines.items():
            o = self._offsets[key]
            retract_idx[o:o + line.shadow.params.size] = line.shadow.params
        retract_idx.flags.writeable = False
        self.retract_index = retract_idx
        self._edges = None

    # ---------------------------------------------------------- indexing

    @property
    def keys(self):
        return list(self.lines)

    def line_offset(self, key: int) -> int:
        return self._offsets[key]

    def point(self, idx: int) -> PieceVertex:
        idx = int(idx)
        if not 0 <= idx < self.n_points:
            raise UnknownVertexError(idx)
        if idx < self.base.n:
            return Base(self.base.labels[idx])
        for key, line in self.lines.items():
            o = self._offsets[key]
            if idx < o + 2 * line.radius + 1:
                return Line(key, idx - o - line.radius)
        raise AssertionError("unreachable")  # pragma: no cover

    def index(self, pv: PieceVertex) -> int:
        if isinstance(pv, Base):
            return self.base.index(pv.label)
        if isinstance(pv, Line):
            line = self.lines.get(pv.key)
            if line is None or not -line.radius <= pv.t <= line.radius:
                raise UnknownVertexError(pv)
            return self._offsets[pv.key] + pv.t + line.radius
        raise UnknownVertexError(pv)

    def line_index(self, key: int, t) -> np.ndarray:
        """Vectorized point index of ``Line(key, t)``."""
        line = self.lines[key]
        return self._offsets[key] + np.asarray(t, dtype=np.int64) + line.radius

    def is_base_index(self, idx) -> np.ndarray:
        return np.asarray(idx) < self.base.n

    # ------------------------------------------------------------- graph

    def edge_arrays(self):
        """``(p, q, w)`` arrays of the piece graph over point indices."""
        if self._edges is None:
            ps, qs, ws = [], [], []
            for u, v, w in self.base.edges:
                ps.append(u)
                qs.append(v)
                ws.append(w)
            for key, line in self.lines.items():
                o = self._offsets[key]
                m = 2 * line.radius + 1
                idx = np.arange(o, o + m)
                ps.extend(idx[:-1])
                qs.extend(idx[1:])
                ws.extend([1] * (m - 1))
                ps.extend(idx)
                qs.extend(line.shadow.params)
                ws.extend([self.mu] * m)
            self._edges = tuple(np.asarray(a, dtype=np.int64) for a in (ps, qs, ws))
        return self._edges

    def adjacency(self):
        p, q, w = self.edge_arrays()
        adj = [[] for _ in range(self.n_points)]
        for a, b, c in zip(p.tolist(), q.tolist(), w.tolist()):
            adj[a].append((b, c))
            adj[b].append((a, c))
        return adj

    def distances_from(self, idx: int, adj=None) -> np.ndarray:
        """Exact distances in the piece graph from point ``idx`` (Dijkstra)."""
        adj = self.adjacency() if adj is None else adj
        dist = np.full(self.n_points, np.iinfo(np.int64).max, dtype=np.int64)
        dist[idx] = 0
        heap = [(0, int(idx))]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def retract(self, pv: PieceVertex) -> Base:
        return retract(self, pv)


def retract(piece: Piece, pv: PieceVertex) -> Base:
    """Retraction onto the base tree: identity on ``Base``, shadow on ``Line``."""
    if isinstance(pv, Base):
        piece.base.index(pv.label)
        return pv
    idx = piece.index(pv)
    return Base(piece.base.labels[int(piece.retract_index[idx])])


def make_synthetic_piece(base: MetricTree, incident_edges, line_assignment, radii=None,
                         mu: int = 1, validate: bool = True) -> Piece:
    """Base tree plus one tethered boundary line per incident edge.

    ``line_assignment`` maps each incident edge id to a :class:`TreeLine` in
    ``base`` or to a sequence of base vertex ids (speed 1).  Free lines may
    be passed under negative keys.
    """
    incident_edges = list(incident_edges)
    if not incident_edges and not line_assignment:
        raise PieceError("a piece needs at least one boundary line")
    lines = {}
    for key, spec in line_assignment.items():
        if isinstance(spec, TreeLine):
            shadow = spec
            if shadow.host is not base:
                raise PieceError(f"line {key} is not hosted by this base tree")
            if validate:
                shadow.check()
        else:
            shadow = TreeLine(base, spec, validate=validate)
        lines[int(key)] = BoundaryLine(int(key), shadow)
    if validate:
        missing = [e for e in incident_edges if e not in lines]
        if missing:
            raise PieceError(f"no line assigned to incident edges {missing}")
    if radii is None:
        radii = (int(base.depth.max()), max(l.radius for l in lines.values()))
    lip = max(l.shadow.speed for l in lines.values())
    return Piece(base=base, lines=lines, mu=mu, lip=lip, radii=tuple(radii), kind="synthetic")


# ------------------------------------------------------------------ pants

_INVERSE = {"a": "A", "A": "a", "b": "B", "B": "b"}
PANTS_SLOTS = (("a", 1), ("b", 1), ("ab", 2))


def cayley_ball(radius: int) -> MetricTree:
    """Ball in the Cayley tree of the free group on ``a, b``; labels are reduced words."""
    words = [""]
    frontier = [""]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for x in "aAbB":
                if w and _INVERSE[w[-1]] == x:
                    continue
                nxt.append(w + x)
        words.extend(nxt)
        frontier = nxt
    # map to prefix words so the generic builder can link parents
    order = {x: i for i, x in enumerate("aAbB")}
    tree = tree_from_words([tuple(order[x] for x in w) for w in words])
    labels = ["".join("aAbB"[i] for i in lab) for lab in tree.labels]
    return MetricTree(tree.n, tree.edges, labels=labels, root=0)


def _power(gen: str, t: int) -> str:
    if t >= 0:
        return gen * t
    inv = "".join(_INVERSE[x] for x in reversed(gen))
    return inv * (-t)


def make_pants_piece(radii, slots=None) -> Piece:
    """Rank-2 free group model of the pair of pants.

    Three boundary lines sit over the cosets of ``<a>``, ``<b>`` and ``<ab>``
    through the identity; the last has speed 2 so the retraction is only
    2-Lipschitz.  ``slots`` maps incident edge ids to slot numbers 0, 1, 2;
    unused slots become free lines with keys ``-1, -2, -3``.
    """
    r_base, r_line = int(radii[0]), int(radii[1])
    slots = dict(slots or {})
    if len(slots) > 3:
        raise PieceError(f"a pants piece has 3 boundary slots, {len(slots)} edges requested")
    if len(set(slots.values())) != len(slots) or not set(slots.values()) <= {0, 1, 2}:
        raise PieceError(f"invalid slot assignment {slots}")
    base = cayley_ball(r_base)
    by_slot = {s: e for e, s in slots.items()}
    lines = {}
    for s, (gen, speed) in enumerate(PANTS_SLOTS):
        r = min(r_line, r_base // speed)
        params = [base.index(_power(gen, t)) for t in range(-r, r + 1)]
        key = by_slot.get(s, -(s + 1))
        lines[key] = BoundaryLine(key, TreeLine(base, params, speed=speed))
    return Piece(base=base, lines=lines, mu=1, lip=2, radii=(r_base, r_line), kind="pants")


# ---------------------------------------------------------------- axioms

@dataclass
class PieceAxiomReport:
    max_displacement: int
    measured_lipschitz: int
    injective: dict
    unit_speed: dict
    shadow_geodesic: dict
    lines_disjoint: bool
    retraction_fixes_base: bool
    mu: int
    lip: int

    @property
    def passed(self) -> bool:
        return (
            self.max_displacement <= self.mu
            and self.measured_lipschitz <= self.lip
            and all(self.injective.values())
            and all(self.unit_speed.values())
            and all(self.shadow_geodesic.values())
            and self.lines_disjoint
            and self.retraction_fixes_base
        )

    def failures(self) -> list[str]:
        out = []
        if self.max_displacement > self.mu:
            out.append(f"displacement {self.max_displacement} > mu={self.mu}")
        if self.measured_lipschitz > self.lip:
            out.append(f"retraction Lipschitz {self.measured_lipschitz} > lip={self.lip}")
        out += [f"line {k} not injective" for k, ok in self.injective.items() if not ok]
        out += [f"line {k} not a unit-speed geodesic" for k, ok in self.unit_speed.items() if not ok]
        out += [f"shadow of line {k} not geodesic" for k, ok in self.shadow_geodesic.items() if not ok]
        if not self.lines_disjoint:
            out.append("boundary lines overlap")
        if not self.retraction_fixes_base:
            out.append("retraction moves a base vertex")
        return out


def verify_piece_axioms(piece: Piece) -> PieceAxiomReport:
    """Exhaustively measure the retraction axioms on the truncated piece."""
    adj = piece.adjacency()
    r = piece.retract_index
    nb = piece.base.n

    disp = 0
    for idx in range(nb, piece.n_points):
        d = piece.distances_from(idx, adj)
        disp = max(disp, int(d[r[idx]]))

    p, q, w = piece.edge_arrays()
    moved = piece.base.distance_many(r[p], r[q])
    lip = int(np.max(-(-moved // w))) if p.size else 0

    injective, unit_speed, geodesic = {}, {}, {}
    seen = set()
    disjoint = True
    for key, line in piece.lines.items():
        injective[key] = line.shadow.is_injective()
        geodesic[key] = line.shadow.is_geodesic()
        idxs = piece.line_index(key, np.arange(-line.radius, line.radius + 1))
        ok = True
        for i, a in enumerate(idxs):
            d = piece.distances_from(int(a), adj)
            if np.any(d[idxs] != np.abs(np.arange(idxs.size) - i)):
                ok = False
                break
        unit_speed[key] = ok
        members = set(idxs.tolist())
        if members & seen or any(m < nb for m in members):
            disjoint = False
        seen |= members
    fixes = bool(np.all(r[:nb] == np.arange(nb)))
    return PieceAxiomReport(
        max_displacement=disp,
        measured_lipschitz=lip,
        injective=injective,
        unit_speed=unit_speed,
        shadow_geodesic=geodesic,
        lines_disjoint=disjoint,
        retraction_fixes_base=fixes,
        mu=piece.mu,
        lip=piece.lip,
    )
