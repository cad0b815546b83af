"""Writers for DOT, edge-list, CSV and JSON artifacts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .complex import TotalComplex
from .embedding import ThreeTreeEmbedding
from .quotient import QuotientTree
from .trees import MetricTree

_PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")


def _open(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err}") from err


def _attrs(attrs: dict) -> str:
    return ", ".join(f'{k}="{v}"' for k, v in attrs.items())


def tree_to_dot(tree: MetricTree, name: str, node_attrs=None, edge_attrs=None) -> str:
    lines = [f"graph {name} {{"]
    for v in range(tree.n):
        attrs = {"label": str(tree.labels[v])}
        if node_attrs:
            attrs.update(node_attrs(v))
        lines.append(f"  {v} [{_attrs(attrs)}];")
    for u, v, w in tree.edges:
        attrs = {"len": str(w)}
        if edge_attrs:
            attrs.update(edge_attrs(u, v))
        lines.append(f"  {u} -- {v} [{_attrs(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def bass_serre_dot(c: TotalComplex) -> str:
    return tree_to_dot(
        c.bs.tree, "T0",
        node_attrs=lambda v: {"label": f"v{v}", "parity": str(int(c.bs.parity[v]))},
        edge_attrs=lambda u, v: {"label": f"e{c.bs.edge_id(u, v)}"},
    )


def quotient_dot(q: QuotientTree) -> str:
    name = f"T{q.parity}"
    if q.empty:
        return f"graph {name} {{\n}}\n"
    sizes = q.class_sizes()

    def color(cls):
        v, _ = q.representative(cls)
        return _PALETTE[q.pieces.index(v) % len(_PALETTE)]

    def node(cls):
        v, b = q.representative(cls)
        return {"label": f"{v}:{b}", "color": color(cls), "size": str(int(sizes[cls]))}

    return tree_to_dot(q.tree, name, node_attrs=node, edge_attrs=lambda a, b: {"color": color(min(a, b))})


def write_edge_list(c: TotalComplex, path: Path):
    u, v, w = c.edge_list()
    with _open(Path(path)) as fh:
        np.savetxt(fh, np.column_stack([u, v, w]), fmt="%d")


def write_class_audit(q: QuotientTree, path: Path):
    with _open(Path(path)) as fh:
        out = csv.writer(fh)
        out.writerow(["class_id", "size", "members"])
        if q.empty:
            return
        groups: dict[int, list] = {}
        for v in q.pieces:
            lo = q.node_offsets[v]
            for b in range(q.tree_of(v).n):
                groups.setdefault(int(q.node_class[lo + b]), []).append(f"{v}:{b}")
        for cls in range(q.n_classes):
            out.writerow([cls, len(groups[cls]), " ".join(groups[cls])])


def write_embed_dump(emb: ThreeTreeEmbedding, path: Path):
    """CSV rows ``vertex, t0, t1, t2`` with quotient classes named by representative."""
    q1, q2 = emb.quotients_

    def name(q, cls):
        if cls < 0:
            return ""
        v, b = q.representative(int(cls))
        return f"{v}:{b}"

    with _open(Path(path)) as fh:
        out = csv.writer(fh)
        out.writerow(["vertex", "t0", "t1", "t2"])
        for x, (t0, t1, t2) in enumerate(emb.coords_.tolist()):
            out.writerow([x, t0, name(q1, t1), name(q2, t2)])


def write_json(obj, path: Path):
    with _open(Path(path)) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
