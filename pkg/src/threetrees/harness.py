"""Invariant checks, distortion runs, benchmarks and artifact export.

Each entry point takes an :class:`InstanceConfig` and returns a report object
whose ``passed`` flag drives the CLI exit status.  Reports serialize to JSON
(with ``schema_version``) and, for per-pair data, CSV.
"""

from __future__ import annotations

import csv
import json
import os
import resource
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .complex import (
    TotalComplex,
    complex_distance,
    doubling_check,
    flip_image,
    measure_rho,
    pair_distances,
    sample_core_pairs,
)
from .config import InstanceConfig
from .embedding import ThreeTreeEmbedding
from .exceptions import ThreeTreesError, TruncationError
from .export import (
    bass_serre_dot,
    quotient_dot,
    write_class_audit,
    write_edge_list,
    write_embed_dump,
    write_json,
)
from .generate import build_instance
from .pathcraft import build_special_path, validate_path
from .pieces import verify_piece_axioms
from .quotient import build_quotient_trees, glue_window, incremental_treeness_trace

__all__ = [
    "SCHEMA_VERSION",
    "Check",
    "InvariantReport",
    "DistortionReport",
    "BenchReport",
    "run_invariants",
    "run_distortion",
    "run_bench",
    "export_artifacts",
    "special_path_ledger",
]

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class InvariantReport:
    config: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), str(detail)))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "invariants",
            "config": self.config,
            "passed": self.passed,
            "checks": [ch.__dict__ for ch in self.checks],
        }


# ------------------------------------------------------------- invariants

def _flip_checks(c: TotalComplex, rep: InvariantReport):
    glued = np.flatnonzero(c.partner >= 0)
    inv = bool(np.array_equal(c.partner[c.partner[glued]], glued))
    same = bool(np.array_equal(c.canon[glued], c.canon[c.partner[glued]]))
    # the formula itself, on every glued description
    bad = 0
    for a in glued.tolist():
        desc = c.describe_raw(a)
        img = flip_image(c, desc)
        if c.raw_id(img.piece, c.pieces[img.piece].index(img.point), img.z) != c.partner[a]:
            bad += 1
        elif flip_image(c, img) != desc:
            bad += 1
    rep.add("flip_involution", inv and same and bad == 0,
            f"{glued.size} glued descriptions, {bad} mismatches")


def _quotient_checks(c: TotalComplex, rep: InvariantReport):
    q1, q2 = build_quotient_trees(c)
    for q in (q1, q2):
        i = q.parity
        trace = incremental_treeness_trace(c, i)
        rep.add(f"T{i}_tree", all(s.acyclic for s in trace),
                f"{q.n_classes} classes, {len(trace)} trace steps")
        bad = [v for v in q.pieces if not q.image_is_isometric(v)]
        rep.add(f"T{i}_convex_images", not bad, f"non-isometric images: {bad}")
        wrong = [v for v in q.pieces if c.bs.parity[v] != i]
        rep.add(f"T{i}_parity_separation", not wrong, f"misplaced pieces: {wrong}")
        # glued line points share a class exactly at equal parameters
        mismatched = 0
        tree = c.bs.tree
        for w in range(c.bs.n):
            if c.bs.parity[w] == i:
                continue
            nbrs = [v for v in tree.neighbors(w) if c.bs.parity[v] == i]
            for k, v in enumerate(nbrs):
                for v2 in nbrs[k + 1:]:
                    W = glue_window(c, v, v2, w)
                    ts = np.arange(-W, W + 1)
                    l1 = c.pieces[v].lines[c.bs.edge_id(v, w)]
                    l2 = c.pieces[v2].lines[c.bs.edge_id(v2, w)]
                    a = q.classes_of(v, l1.shadow.params[ts + l1.radius])
                    b = q.classes_of(v2, l2.shadow.params[ts + l2.radius])
                    # equal parameters share a class, distinct parameters never do
                    same = a[:, None] == b[None, :]
                    mismatched += int(np.sum(same != np.eye(ts.size, dtype=bool)))
        rep.add(f"T{i}_gluing_parameters", mismatched == 0, f"{mismatched} parameter mismatches")
    return q1, q2


def _embedding_checks(c: TotalComplex, q1, q2, rep: InvariantReport):
    emb = ThreeTreeEmbedding(check_well_defined=False).fit(c)
    raw = emb.raw_coords_
    glued = np.flatnonzero(c.partner >= 0)
    a, b = raw[1:, glued], raw[1:, c.partner[glued]]
    both = (a >= 0) & (b >= 0)
    rep.add("fi_well_defined", not np.any(a[both] != b[both]),
            f"{glued.size} glued descriptions, {int(both.sum())} coordinate comparisons")

    # every neighbour whose line covers z gives the same class
    tree = c.bs.tree
    conflicts, compared = 0, 0
    for q in (q1, q2):
        if q.empty:
            continue
        for w in range(c.bs.n):
            if c.bs.parity[w] == q.parity:
                continue
            nbrs = sorted(tree.neighbors(w))
            for z in range(-c.fiber_radius, c.fiber_radius + 1):
                seen = set()
                for u in nbrs:
                    line = c.pieces[u].lines.get(c.bs.edge_id(u, w))
                    if line is not None and abs(z) <= line.radius:
                        seen.add(q.class_of(u, line.shadow.at(z)))
                compared += len(seen) > 0
                conflicts += len(seen) > 1
    rep.add("fi_neighbor_independent", conflicts == 0, f"{compared} (piece, level) cells, {conflicts} conflicts")

    # fiber sensitivity: own-parity f_i ignores z, opposite-parity f_i ignores the point
    Z = c.levels
    bad = 0
    for v, piece in c.pieces.items():
        lo, hi = int(c.offsets[v]), int(c.offsets[v + 1])
        for i, row in ((1, raw[1]), (2, raw[2])):
            block = row[lo:hi].reshape(piece.n_points, Z)
            if c.bs.parity[v] == i:
                bad += int(np.any(block != block[:, :1]))
            else:
                bad += int(np.any(block != block[:1, :]))
    rep.add("fi_fiber_split", bad == 0, f"{bad} pieces with mixed dependence")

    audit = emb.audit_edges()
    lip = emb.constants_.lip
    rep.add("fi_lipschitz", audit["max_f1_stretch"] <= lip and audit["max_f2_stretch"] <= lip,
            f"max stretch f1={audit['max_f1_stretch']} f2={audit['max_f2_stretch']} (L={lip})")
    rep.add("f0_edge_step", audit["max_f0_step"] <= 1, f"max f0 step {audit['max_f0_step']}")
    return emb


def run_invariants(cfg: InstanceConfig) -> InvariantReport:
    """Every structural invariant of the construction, one check each.

    Construction failures (missing lines, cycles, speed mismatches) become
    failed checks rather than exceptions.
    """
    rep = InvariantReport(config=cfg.to_dict())
    try:
        inst, c = build_instance(cfg)
    except ThreeTreesError as err:
        rep.add("build", False, f"{type(err).__name__}: {err}")
        return rep
    rep.add("build", True, f"{c.n} vertices, {c.graph.n_edges} edges")
    for v in sorted(inst.pieces):
        r = verify_piece_axioms(inst.pieces[v])
        rep.add(f"piece_{v}_axioms", r.passed, "; ".join(r.failures()) or
                f"displacement {r.max_displacement}, lipschitz {r.measured_lipschitz} (lip {r.lip})")
    rep.add("bipartition", np.array_equal(c.bs.recolor(), c.bs.parity), "recolouring from the root")
    try:
        _flip_checks(c, rep)
        q1, q2 = _quotient_checks(c, rep)
        _embedding_checks(c, q1, q2, rep)
    except ThreeTreesError as err:
        rep.add("construction", False, f"{type(err).__name__}: {err}")
        return rep
    rho = measure_rho(c)
    rep.add("rho", rho is None or rho >= 2 * c.mu, f"rho_hat={rho}, 2*mu={2 * c.mu}")
    return rep


# ------------------------------------------------------------- distortion

_PAIR_COLUMNS = ["x", "y", "d", "d0", "d1", "d2", "d_l1", "bound", "slack",
                 "special_len", "special_n", "path_bound", "path_status"]


@dataclass
class DistortionReport:
    config: dict
    constants: dict
    rows: list
    doubling: dict
    timings: dict = field(default_factory=dict)

    def _col(self, name):
        return np.array([r[name] for r in self.rows], dtype=np.int64)

    def summary(self) -> dict:
        rows = self.rows
        if not rows:
            return {"pairs": 0}
        d, dl1 = self._col("d"), self._col("d_l1")
        d0, d1, d2 = self._col("d0"), self._col("d1"), self._col("d2")
        lip, rho = self.constants["lip"], self.constants["rho"]
        nz = d > 0
        ok_paths = [r for r in rows if r["path_status"] == "ok"]
        statuses = {}
        for r in rows:
            statuses[r["path_status"]] = statuses.get(r["path_status"], 0) + 1
        f0_bad = int(np.sum(d0 > 1)) if rho is None else int(np.sum(rho * (d0 - 1) > d))
        # multiplicative envelope implied by the coordinate bounds
        mu = self.constants["mu"]
        upper = 2 * lip * d + (d / rho if rho else 0) + (1 if rho else 2)
        lower = 2 * mu * dl1 + 4 * mu
        return {
            "pairs": len(rows),
            "envelope": {"upper": f"d_l1 <= {2 * lip}*d + d/rho + 1", "lower": f"d <= {2 * mu}*d_l1 + {4 * mu}"},
            "envelope_violations": int(np.sum(dl1 > upper) + np.sum(d > lower)),
            "lower_bound_violations": int(np.sum(self._col("slack") < 0)),
            "f1_violations": int(np.sum(d1 > lip * d)),
            "f2_violations": int(np.sum(d2 > lip * d)),
            "f0_violations": f0_bad,
            "min_slack": int(self._col("slack").min()),
            "max_ratio_d_over_l1": float(np.max(d[nz] / np.maximum(dl1[nz], 1))) if nz.any() else 0.0,
            "max_ratio_l1_over_d": float(np.max(dl1[nz] / d[nz])) if nz.any() else 0.0,
            "mean_ratio_l1_over_d": float(np.mean(dl1[nz] / d[nz])) if nz.any() else 0.0,
            "path_status_counts": dict(sorted(statuses.items())),
            "path_success_rate": len(ok_paths) / len(rows),
            "path_violations": sum(r["path_status"] not in ("ok", "truncation") for r in rows),
        }

    @property
    def passed(self) -> bool:
        s = self.summary()
        if not self.rows:
            return False
        return (s["lower_bound_violations"] == 0 and s["f0_violations"] == 0 and s["envelope_violations"] == 0 and s["f1_violations"] == 0
                and s["f2_violations"] == 0 and s["path_violations"] == 0
                and self.doubling["shrink_violations"] == 0)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "distortion",
            "config": self.config,
            "constants": self.constants,
            "doubling": self.doubling,
            "summary": self.summary(),
            "passed": self.passed,
            "timings": self.timings,
        }

    def write(self, outdir):
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "distortion.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_PAIR_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows)
        write_json(self.to_dict(), out / "distortion.json")


def _path_row(emb, c, x, y, d, consts, d0, d1, d2):
    try:
        p = build_special_path(emb, x, y)
    except TruncationError:
        return {"special_len": -1, "special_n": -1, "path_bound": -1, "path_status": "truncation"}
    except ThreeTreesError as err:
        return {"special_len": -1, "special_n": -1, "path_bound": -1, "path_status": f"error:{type(err).__name__}"}
    r = validate_path(c, p)
    bound = consts.path_bound(p.n, d1, d2)
    status = "ok"
    if not r.valid or not r.ledger_consistent:
        status = "invalid"
    elif r.length < d:
        status = "shorter_than_d"
    elif r.max_jump > 2 * consts.mu:
        status = "jump_too_long"
    elif r.length > bound:
        status = "exceeds_bound"
    elif d0 < p.n - 2:
        status = "n_exceeds_d0"
    return {"special_len": r.length, "special_n": p.n, "path_bound": bound, "path_status": status}


def run_distortion(cfg: InstanceConfig, n_pairs: int | None = None, seed: int | None = None,
                   radii_scale: float = 1.5, workers: int = 1, paths: bool = True) -> DistortionReport:
    """Sample safe-core pairs, keep those stable under enlarged radii, and test both bounds.

    Pairs are drawn in rounds until ``n_pairs`` of them pass the doubling
    check (or ten rounds elapse); the report covers the first ``n_pairs``
    agreeing pairs.
    """
    n_pairs = cfg.sampleCount if n_pairs is None else int(n_pairs)
    seed = cfg.seed if seed is None else int(seed)
    if radii_scale <= 1:
        raise ValueError("radii_scale must exceed 1")
    t = time.perf_counter()
    _, c = build_instance(cfg)
    _, c_big = build_instance(cfg.scaled(radii_scale))
    emb = ThreeTreeEmbedding().fit(c)
    t_build = time.perf_counter() - t

    t = time.perf_counter()
    kept, checked, disagree, shrink = [], 0, 0, 0
    for rnd in range(10):
        want = max(n_pairs - sum(len(k) for k in kept), 0)
        if want == 0:
            break
        pairs = sample_core_pairs(c, cfg.margin, want + want // 4 + 10, [seed, rnd])
        dr = doubling_check(c, c_big, pairs, workers=workers)
        checked += len(pairs)
        disagree += int((~dr.agree).sum())
        shrink += dr.shrink_violations
        kept.append(np.column_stack([dr.pairs, dr.d_small])[dr.agree])
    kept = np.concatenate(kept) if kept else np.empty((0, 3), np.int64)
    # a coordinate can be undefined only when one parity class is empty
    defined = (emb.coords_[kept[:, 0]] >= 0).all(axis=1) & (emb.coords_[kept[:, 1]] >= 0).all(axis=1)
    undefined = int((~defined).sum())
    kept = kept[defined][:n_pairs]
    t_pairs = time.perf_counter() - t

    t = time.perf_counter()
    consts = emb.constants_
    P, Q = emb.transform(kept[:, 0]), emb.transform(kept[:, 1])
    dd = emb.coordinate_distances(P, Q)
    rows = []
    for (x, y, d), (d0, d1, d2) in zip(kept.tolist(), dd.tolist()):
        row = {"x": x, "y": y, "d": d, "d0": d0, "d1": d1, "d2": d2, "d_l1": d0 + d1 + d2}
        row["bound"] = int(consts.lower_bound(d0, d1, d2))
        row["slack"] = row["bound"] - d
        if paths:
            row.update(_path_row(emb, c, x, y, d, consts, d0, d1, d2))
        else:
            row.update({"special_len": -1, "special_n": -1, "path_bound": -1, "path_status": "skipped"})
        rows.append(row)
    t_eval = time.perf_counter() - t
    return DistortionReport(
        config=cfg.to_dict(),
        constants=consts.to_dict(),
        rows=rows,
        doubling={
            "radii_scale": radii_scale,
            "pairs_checked": checked,
            "disagreements": disagree,
            "disagreement_fraction": disagree / checked if checked else 0.0,
            "shrink_violations": shrink,
            "agreeing_pairs_used": len(rows),
            "undefined_coordinate_pairs": undefined,
        },
        timings={"build_s": t_build, "pairs_s": t_pairs, "evaluate_s": t_eval},
    )


# ------------------------------------------------------------- bench

@dataclass
class BenchReport:
    config: dict
    stats: dict
    timings: dict

    passed: bool = True

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "bench", "config": self.config,
                "stats": self.stats, "timings": self.timings, "passed": self.passed}


def run_bench(cfg: InstanceConfig, queries: int = 20, seed: int | None = None, workers: int | None = None,
              batch_size: int = 1000) -> BenchReport:
    """Build time, single-query latency per search method, batch throughput and memory."""
    seed = cfg.seed if seed is None else int(seed)
    t = time.perf_counter()
    _, c = build_instance(cfg)
    t_build = time.perf_counter() - t
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, c.n, size=(queries, 2))
    timings = {"build_s": t_build}
    for method in ("bfs", "bidirectional"):
        times = []
        for x, y in pairs.tolist():
            t = time.perf_counter()
            complex_distance(c, x, y, method=method)
            times.append(time.perf_counter() - t)
        timings[f"{method}_query_mean_s"] = float(np.mean(times))
        timings[f"{method}_query_max_s"] = float(np.max(times))
    workers = workers or os.cpu_count() or 1
    batch = sample_core_pairs(c, 0, batch_size, seed)
    for k in sorted({1, workers}):
        t = time.perf_counter()
        pair_distances(c, batch, workers=k)
        timings[f"batch_{len(batch)}_workers_{k}_s"] = time.perf_counter() - t
    g = c.graph
    arrays = g.indptr.nbytes + g.indices.nbytes + g.weights.nbytes + c.canon.nbytes + c.rep.nbytes + c.partner.nbytes
    stats = {
        "vertices": c.n,
        "edges": g.n_edges,
        "raw_descriptions": int(c.offsets[-1]),
        "identified_pairs": c.build_log["identified_pairs"],
        "pieces": c.bs.n,
        "array_bytes": int(arrays),
        "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        "queries": queries,
        "workers": workers,
    }
    return BenchReport(cfg.to_dict(), stats, timings)


# ------------------------------------------------------------- export

def export_artifacts(cfg: InstanceConfig, outdir) -> list[Path]:
    """Write DOT trees, the edge list, the embedding dump, class audits and the build log."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _, c = build_instance(cfg)
    emb = ThreeTreeEmbedding().fit(c)
    q1, q2 = emb.quotients_
    written = []

    def text(name, body):
        p = out / name
        p.write_text(body)
        written.append(p)

    text("T0.dot", bass_serre_dot(c))
    text("T1.dot", quotient_dot(q1))
    text("T2.dot", quotient_dot(q2))
    for name, fn, obj in (("complex.edges", write_edge_list, c), ("embed.csv", write_embed_dump, emb),
                          ("T1_classes.csv", write_class_audit, q1), ("T2_classes.csv", write_class_audit, q2)):
        fn(obj, out / name)
        written.append(out / name)
    log = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "complex": c.build_log,
        "quotients": {f"T{q.parity}": {"classes": q.n_classes, "gluings": q.gluing_log} for q in (q1, q2)},
        "constants": emb.constants_.to_dict(),
    }
    write_json(log, out / "build_log.json")
    written.append(out / "build_log.json")
    return written


def special_path_ledger(cfg: InstanceConfig, x: int, y: int) -> dict:
    """Segment ledger of one special path with its validation."""
    _, c = build_instance(cfg)
    emb = ThreeTreeEmbedding().fit(c)
    p = build_special_path(emb, x, y)
    return {"schema_version": SCHEMA_VERSION, "path": json.loads(p.to_json()),
            "validation": validate_path(c, p).to_dict(), "distance": c.distance(x, y)}
