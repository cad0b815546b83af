"""Deterministic instance generation from an :class:`InstanceConfig`.

Line choices are drawn from a generator seeded by ``(seed, piece, edge)`` and
consumed depth by depth, so enlarging the radii only extends the same lines.
That prefix stability is what makes the doubling check meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import BassSerreTree, TotalComplex, build_complex
from .config import InstanceConfig
from .exceptions import ConfigError, PieceError
from .pieces import Piece, make_pants_piece, make_synthetic_piece
from .trees import TreeLine, path_tree, regular_tree, regular_words, tree_from_edges, tree_from_words

__all__ = ["Instance", "generate_instance", "build_instance", "bass_serre_from_config", "pants_slots"]


@dataclass
class Instance:
    config: InstanceConfig
    bs: BassSerreTree
    pieces: dict


def bass_serre_from_config(cfg: InstanceConfig) -> BassSerreTree:
    spec = cfg.bsTree
    if "edges" in spec:
        edges = [tuple(e) for e in spec["edges"]]
        n = spec.get("vertices", 1 + max((max(e) for e in edges), default=-1))
        return BassSerreTree(tree_from_edges(edges, n=n), truncated=False)
    return BassSerreTree(regular_tree(spec["valence"], spec["depth"]), truncated=True)


def _ray_choices(rng, valence: int, length: int, identity: bool):
    """Two rays from the root leaving through distinct branches."""
    if identity:
        return [0] + [0] * (length - 1), [1] + [0] * (length - 1)
    first = int(rng.integers(valence))
    second = (first + 1 + int(rng.integers(valence - 1))) % valence
    a, b = [first], [second]
    for _ in range(length - 1):
        a.append(int(rng.integers(valence - 1)))
        b.append(int(rng.integers(valence - 1)))
    return a, b


def _regular_base(valence, r_base, r_line, rays):
    words = set(regular_words(valence, r_base))
    for a, b in rays.values():
        for k in range(1, r_line + 1):
            words.add(tuple(a[:k]))
            words.add(tuple(b[:k]))
    base = tree_from_words(words)
    lines = {}
    for e, (a, b) in rays.items():
        params = [base.index(tuple(a[:-t])) for t in range(-r_line, 0)]
        params += [base.index(tuple(b[:t])) for t in range(0, r_line + 1)]
        lines[e] = params
    return base, lines


def _explicit_base(edges, r_line, rng_for, incident, identity):
    base = tree_from_edges([tuple(e) for e in edges])
    children = {v: sorted(u for u in base.neighbors(v) if base.parent[u] == v) for v in range(base.n)}

    def walk(start, rng):
        out = [start]
        while len(out) < r_line:
            kids = children[out[-1]]
            if not kids:
                raise PieceError(f"base tree cannot host a line of radius {r_line}")
            out.append(kids[0 if identity else int(rng.integers(len(kids)))])
        return out

    lines = {}
    for e in incident:
        rng = rng_for(e)
        top = children[base.root]
        if len(top) < 2:
            raise PieceError("base tree root needs two branches to host a line")
        i = 0 if identity else int(rng.integers(len(top)))
        j = 1 if identity else (i + 1 + int(rng.integers(len(top) - 1))) % len(top)
        ra, rb = (walk(top[i], rng), walk(top[j], rng)) if r_line else ([], [])
        lines[e] = [ra[-t - 1] for t in range(-r_line, 0)] + [base.root] + rb
    return base, lines


def pants_slots(bs: BassSerreTree) -> dict:
    """Slot per ``(piece, edge)`` so that glued lines always share a speed.

    All neighbours of a piece ``w`` use lines of one speed towards ``w``; a
    degree-3 piece must use its single speed-2 slot for exactly one edge.
    """
    tree = bs.tree
    if any(tree.degree(v) > 3 for v in range(bs.n)):
        raise PieceError("pants pieces host at most 3 boundary lines")
    speed_towards = {tree.root: 1}
    for v in tree.order.tolist():
        kids = [u for u in tree.neighbors(v) if tree.parent[u] == v]
        parent_fast = v != tree.root and speed_towards[int(tree.parent[v])] == 2
        fast_left = tree.degree(v) == 3 and not parent_fast
        for u in kids:
            speed_towards[u] = 2 if fast_left else 1
            fast_left = False
    slots = {}
    for v in range(bs.n):
        slow = iter((0, 1))
        for e in bs.incident_edges(v):
            w = bs.other_end(e, v)
            if speed_towards[w] == 2:
                slots[(v, e)] = 2
            else:
                try:
                    slots[(v, e)] = next(slow)
                except StopIteration:
                    raise PieceError(f"piece {v} needs more than two speed-1 slots") from None
    return slots


def generate_instance(cfg: InstanceConfig) -> Instance:
    """Bass-Serre tree and pieces for a config (no gluing yet)."""
    bs = bass_serre_from_config(cfg)
    r_base, r_line = cfg.radii["base"], cfg.radii["line"]
    policy = cfg.line_policy
    identity = policy == "identity"
    pieces: dict[int, Piece] = {}

    if cfg.pieceKind == "pants":
        if policy != "seeded":
            raise ConfigError("pants pieces only support the 'seeded' line policy")
        slots = pants_slots(bs)
        for v in range(bs.n):
            mine = {e: s for (u, e), s in slots.items() if u == v}
            pieces[v] = make_pants_piece((r_base, r_line), mine)
        return Instance(cfg, bs, pieces)

    spec = cfg.base_spec
    for v in range(bs.n):
        incident = bs.incident_edges(v)
        keys = incident if incident else [-1]

        def rng_for(e, v=v):
            return np.random.default_rng([cfg.seed, v, e + 1])

        if spec["kind"] == "regular":
            k = spec["valence"]
            rays = {e: _ray_choices(rng_for(e), k, r_line, identity) for e in keys}
            base, lines = _regular_base(k, r_base, r_line, rays)
        elif spec["kind"] == "path":
            half = max(r_base, r_line)
            base = path_tree(2 * half + 1, start=-half)
            lines = {}
            for e in keys:
                sign = 1 if identity else int(rng_for(e).choice([-1, 1]))
                lines[e] = [base.index(sign * t) for t in range(-r_line, r_line + 1)]
        else:
            base, lines = _explicit_base(spec["edges"], r_line, rng_for, keys, identity)

        validate = True
        if policy == "broken-shadow" and v == 0:
            e0 = min(lines)
            if r_line < 2:
                raise ConfigError("broken-shadow control needs radii.line >= 2")
            p = list(lines[e0])
            p[r_line + 1], p[r_line + 2] = p[r_line + 2], p[r_line + 1]
            lines[e0] = p
            validate = False
        if policy == "drop-line" and v == 0:
            lines.pop(min(lines))
            validate = False
        assignment = {e: TreeLine(base, p, validate=validate) for e, p in lines.items()}
        if assignment:
            pieces[v] = make_synthetic_piece(base, incident, assignment, radii=(r_base, r_line), validate=validate)
        else:
            pieces[v] = Piece(base=base, lines={}, radii=(r_base, r_line))
    return Instance(cfg, bs, pieces)


def build_instance(cfg: InstanceConfig) -> tuple[Instance, TotalComplex]:
    inst = generate_instance(cfg)
    c = build_complex(inst.bs, inst.pieces, cfg.radii["fiber"], radii=(cfg.radii["base"], cfg.radii["line"],
                                                                        cfg.radii["fiber"]))
    return inst, c
