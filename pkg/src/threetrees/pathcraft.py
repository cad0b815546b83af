"""Explicit staircase paths witnessing the lower bound of the embedding.

For ``x`` in piece ``v_0 = f0(x)`` and ``y`` in ``v_n = f0(y)``, walk the
Bass-Serre geodesic ``v_0, ..., v_n``.  In piece ``v_j`` the path runs
horizontally at fiber level ``t_j`` along a base-tree geodesic ``alpha_j``;
consecutive pieces are joined by a jump of two tethers through the glued
plane.  Levels and endpoints are chosen so that, per parity, the segments
``alpha_j`` concatenate to a geodesic of the quotient tree from ``f_i(x)`` to
``f_i(y)``:

* ``t_0`` is the fiber coordinate of ``x`` and ``t_n`` that of ``y``;
* ``alpha_j`` starts at ``shadow_{(v_j, v_{j-1})}(t_{j-1})`` (or at
  ``r(x)`` for ``j = 0``);
* ``alpha_j`` ends at the nearest-point projection of its start onto the
  line shared by the images of ``T_{v_j}`` and ``T_{v_{j+2}}``; the
  parameter of that point is ``t_{j+1}``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .complex import TotalComplex
from .embedding import ThreeTreeEmbedding
from .exceptions import PathConstructionError, TruncationError, UnknownVertexError
from .quotient import QuotientTree, glue_window

__all__ = ["SegmentRecord", "SpecialPath", "PathReport", "bs_geodesic", "build_special_path", "validate_path"]


def bs_geodesic(c: TotalComplex, v: int, v2: int) -> list[int]:
    return c.bs.tree.geodesic(v, v2)


@dataclass
class SegmentRecord:
    piece: int
    parity: int
    level: int
    alpha_start: int  # base vertex id in the piece
    alpha_end: int
    class_start: int
    class_end: int
    alpha_length: int
    jump: int  # cost of the jump into the next piece, 0 for the last


@dataclass
class SpecialPath:
    x: int
    y: int
    vertices: list
    segments: list = field(default_factory=list)
    n: int = 0
    entry_cost: int = 0  # x to the start of the first segment
    exit_cost: int = 0  # end of the last segment to y
    vertical: int = 0  # fiber adjustment, only used when n = 0

    @property
    def length_claimed(self) -> int:
        return (sum(s.alpha_length + s.jump for s in self.segments)
                + self.entry_cost + self.exit_cost + self.vertical)

    def to_json(self) -> str:
        return json.dumps({
            "x": self.x, "y": self.y, "n": self.n, "length": self.length_claimed,
            "entry_cost": self.entry_cost, "exit_cost": self.exit_cost, "vertical": self.vertical,
            "segments": [asdict(s) for s in self.segments],
        })


class _Walker:
    """Accumulates canonical vertex ids, dropping repeats."""

    def __init__(self, c: TotalComplex):
        self.c = c
        self.ids: list[int] = []

    def at(self, v, idx, z):
        c = self.c
        if abs(z) > c.fiber_radius:
            raise TruncationError(f"fiber level {z} outside window")
        x = int(c.canon[c.raw_id(v, int(idx), int(z))])
        if not self.ids or self.ids[-1] != x:
            self.ids.append(x)

    def horizontal(self, v, base_path, z):
        for b in base_path:
            self.at(v, b, z)

    def vertical(self, v, idx, z0, z1):
        step = 1 if z1 >= z0 else -1
        for z in range(z0, z1 + step, step):
            self.at(v, idx, z)


def _line_class_set(c, q: QuotientTree, v: int, w: int, window: int) -> np.ndarray:
    shadow = c.pieces[v].lines[c.bs.edge_id(v, w)].shadow
    path = shadow.path_vertices()
    s = shadow.speed
    seg = path[s * (shadow.radius - window): s * (shadow.radius + window) + 1]
    return q.classes_of(v, seg)


def _parameter_of_class(c, q, v, w, cls) -> int:
    """Parameter ``t`` with ``shadow_{(v, w)}(t)`` in class ``cls``."""
    shadow = c.pieces[v].lines[c.bs.edge_id(v, w)].shadow
    b = q.member_in(cls, v)
    t = None if b is None else shadow.parameter_of(b)
    if t is None and b is not None and shadow.speed > 1:
        # sub-step point of a fast line: snap to the nearest parameter point
        path = shadow.path_vertices().tolist()
        k = path.index(b)
        t = int(round(k / shadow.speed)) - shadow.radius
    if t is None:
        raise PathConstructionError(f"class {cls} is not on the line of piece {v} towards {w}")
    return t


def build_special_path(emb: ThreeTreeEmbedding, x: int, y: int) -> SpecialPath:
    """Construct the staircase path from ``x`` to ``y``.

    Raises
    ------
    TruncationError
        A required level, parameter or coordinate lies outside the window.
    PathConstructionError
        The chaining failed, which would contradict convexity of the images.
    """
    c = emb.complex_
    q = {1: emb.quotients_[0], 2: emb.quotients_[1]}
    x, y = int(x), int(y)
    if x == y:
        return SpecialPath(x, y, [x])
    fx, fy = emb.transform([x])[0], emb.transform([y])[0]
    dx, dy = c.describe(x), c.describe(y)
    route = bs_geodesic(c, dx.piece, dy.piece)
    n = len(route) - 1
    par = [int(c.bs.parity[v]) for v in route]
    walk = _Walker(c)

    def base_of(v, pv):
        p = c.pieces[v]
        return int(p.retract_index[p.index(pv)])

    def shadow(v, w, t):
        line = c.pieces[v].lines[c.bs.edge_id(v, w)]
        if abs(t) > line.radius:
            raise TruncationError(f"parameter {t} outside line window of piece {v}")
        return line.shadow.at(t)

    bx, by = base_of(dx.piece, dx.point), base_of(dy.piece, dy.point)
    entry = 0 if bx == c.pieces[dx.piece].index(dx.point) else c.pieces[dx.piece].mu
    exit_ = 0 if by == c.pieces[dy.piece].index(dy.point) else c.pieces[dy.piece].mu
    walk.at(dx.piece, c.pieces[dx.piece].index(dx.point), dx.z)

    if n == 0:
        v = route[0]
        i = par[0]
        walk.vertical(v, bx, dx.z, dy.z)
        base = c.pieces[v].base
        alpha = base.geodesic(bx, by)
        walk.horizontal(v, alpha, dy.z)
        walk.at(v, c.pieces[v].index(dy.point), dy.z)
        seg = SegmentRecord(v, i, dy.z, bx, by, q[i].class_of(v, bx), q[i].class_of(v, by),
                            base.distance(bx, by), 0)
        return SpecialPath(x, y, walk.ids, [seg], 0, entry, exit_, abs(dx.z - dy.z))

    levels = [None] * (n + 1)
    levels[0], levels[n] = dx.z, dy.z
    starts = [None] * (n + 1)
    ends = [None] * (n + 1)
    segments = []
    for j, v in enumerate(route):
        i = par[j]
        qi = q[i]
        if j == 0:
            start = bx
        else:
            start = shadow(v, route[j - 1], levels[j - 1])
        if j == n:
            end = by
        elif j == n - 1:
            end = shadow(v, route[n], levels[n])
        else:
            w, v2 = route[j + 1], route[j + 2]
            window = glue_window(c, v, v2, w)
            target = np.unique(_line_class_set(c, qi, v, w, window))
            cls = qi.tree.project(target, qi.class_of(v, start))
            levels[j + 1] = _parameter_of_class(c, qi, v, w, cls)
            end = shadow(v, w, levels[j + 1])
        starts[j], ends[j] = start, end

    for j, v in enumerate(route):
        i = par[j]
        base = c.pieces[v].base
        alpha = base.geodesic(starts[j], ends[j])
        walk.horizontal(v, alpha, levels[j])
        jump = 0
        if j < n:
            w = route[j + 1]
            e = c.bs.edge_id(v, w)
            pv, pw = c.pieces[v], c.pieces[w]
            if abs(levels[j + 1]) > pv.lines[e].radius or abs(levels[j]) > pw.lines[e].radius:
                raise TruncationError(f"jump between pieces {v} and {w} leaves the line window")
            walk.at(v, pv.line_index(e, levels[j + 1]), levels[j])
            crossing = walk.ids[-1]
            walk.at(w, pw.line_index(e, levels[j]), levels[j + 1])
            if walk.ids[-1] != crossing:
                raise TruncationError(f"crossing between pieces {v} and {w} is not glued in the window")
            jump = pv.mu + pw.mu
        segments.append(SegmentRecord(
            v, i, levels[j], starts[j], ends[j], q[i].class_of(v, starts[j]), q[i].class_of(v, ends[j]),
            base.distance(starts[j], ends[j]), jump,
        ))
    walk.at(dy.piece, c.pieces[dy.piece].index(dy.point), dy.z)
    if walk.ids[0] != x or walk.ids[-1] != y:
        raise PathConstructionError("path does not connect its endpoints")
    # per parity the segments must chain start-to-end in the quotient tree
    for i in (1, 2):
        segs = [s for s in segments if s.parity == i]
        for s0, s1 in zip(segs, segs[1:]):
            if s0.class_end != s1.class_start:
                raise PathConstructionError(f"segments of parity {i} do not chain")
        if segs and (segs[0].class_start != fx[i] or segs[-1].class_end != fy[i]):
            raise PathConstructionError(f"parity {i} segments do not run from f_{i}(x) to f_{i}(y)")
    return SpecialPath(x, y, walk.ids, segments, n, entry, exit_, 0)


@dataclass
class PathReport:
    valid: bool
    length: int
    alpha_total: int
    jump_total: int
    max_jump: int
    ledger_consistent: bool
    bad_steps: list

    def to_dict(self) -> dict:
        return asdict(self)


def validate_path(c: TotalComplex, p: SpecialPath) -> PathReport:
    """Recompute the length of a path from the graph and compare with its ledger."""
    bad, length = [], 0
    for k, (a, b) in enumerate(zip(p.vertices, p.vertices[1:])):
        try:
            w = c.graph.edge_weight(int(a), int(b))
        except (IndexError, UnknownVertexError):
            w = None
        if w is None:
            bad.append(k)
        else:
            length += w
    alpha = sum(s.alpha_length for s in p.segments)
    jumps = [s.jump for s in p.segments]
    ends_ok = bool(p.vertices) and p.vertices[0] == p.x and p.vertices[-1] == p.y
    return PathReport(
        valid=not bad and ends_ok,
        length=length,
        alpha_total=alpha,
        jump_total=sum(jumps),
        max_jump=max(jumps, default=0),
        ledger_consistent=not bad and length == p.length_claimed,
        bad_steps=bad,
    )
