import csv
import json
import re

import pytest

from threetrees.complex import sample_core_pairs
from threetrees.config import load_config
from threetrees.harness import export_artifacts, run_bench, run_distortion, run_invariants
from threetrees.pathcraft import build_special_path, validate_path

_NODE = re.compile(r"^\s*(\d+) \[(.*)\];$")
_EDGE = re.compile(r"^\s*(\d+) -- (\d+) \[(.*)\];$")


def parse_dot(text):
    """Minimal DOT reader for the undirected graphs we emit."""
    lines = text.strip().splitlines()
    assert re.match(r"^graph \w+ \{$", lines[0]) and lines[-1] == "}"
    nodes, edges = {}, []
    for line in lines[1:-1]:
        if m := _EDGE.match(line):
            edges.append((int(m[1]), int(m[2])))
        elif m := _NODE.match(line):
            nodes[int(m[1])] = dict(re.findall(r'(\w+)="([^"]*)"', m[2]))
        else:
            raise AssertionError(f"unparsed DOT line {line!r}")
    return nodes, edges


class TestInvariants:
    def test_instance_a_passes(self):
        rep = run_invariants(load_config("instance_a"))
        assert rep.passed, [c for c in rep.checks if not c.passed]
        names = {c.name for c in rep.checks}
        assert {"flip_involution", "T1_tree", "T2_tree", "fi_well_defined", "fi_neighbor_independent",
                "fi_lipschitz", "T1_convex_images"} <= names

    def test_broken_shadow_fails(self):
        rep = run_invariants(load_config("negative_broken_shadow"))
        failed = {c.name for c in rep.checks if not c.passed}
        assert "piece_0_axioms" in failed
        assert "construction" in failed

    def test_missing_gluing_fails(self):
        rep = run_invariants(load_config("negative_missing_gluing"))
        assert not rep.passed and rep.checks[0].name == "build"

    def test_report_json(self):
        doc = run_invariants(load_config("single_piece")).to_dict()
        assert doc["schema_version"] == 1 and doc["passed"]
        json.dumps(doc)


@pytest.fixture(scope="module")
def report():
    return run_distortion(load_config("instance_a"), n_pairs=120, seed=3)


class TestDistortion:
    def test_rows_consistent(self, report):
        assert len(report.rows) == 120
        for r in report.rows:
            assert r["d_l1"] == r["d0"] + r["d1"] + r["d2"]
            assert r["slack"] == r["bound"] - r["d"] >= 0
            assert r["path_status"] == "ok" and r["special_len"] >= r["d"]

    def test_passes(self, report):
        s = report.summary()
        assert report.passed and s["lower_bound_violations"] == 0 and s["envelope_violations"] == 0

    def test_write(self, report, tmp_path):
        report.write(tmp_path / "out")
        with open(tmp_path / "out" / "distortion.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 120 and list(rows[0]) == [
            "x", "y", "d", "d0", "d1", "d2", "d_l1", "bound", "slack",
            "special_len", "special_n", "path_bound", "path_status"]
        doc = json.loads((tmp_path / "out" / "distortion.json").read_text())
        assert doc["schema_version"] == 1 and doc["summary"]["pairs"] == 120

    def test_deterministic_except_timings(self, report):
        again = run_distortion(load_config("instance_a"), n_pairs=120, seed=3).to_dict()
        first = report.to_dict()
        first.pop("timings"), again.pop("timings")
        assert json.dumps(first, sort_keys=True) == json.dumps(again, sort_keys=True)

    def test_identical_pair(self, emb_a):
        c = emb_a.complex_
        x = int(sample_core_pairs(c, 2, 1, seed=0)[0, 0])
        P = emb_a.transform([x])
        assert emb_a.coordinate_distances(P, P).tolist() == [[0, 0, 0]]
        assert c.distance(x, x) == 0
        assert validate_path(c, build_special_path(emb_a, x, x)).length == 0

    def test_single_piece_has_no_pairs(self):
        rep = run_distortion(load_config("single_piece"), n_pairs=5)
        assert not rep.passed and rep.doubling["undefined_coordinate_pairs"] > 0

    def test_rejects_scale(self):
        with pytest.raises(ValueError):
            run_distortion(load_config("instance_a"), n_pairs=5, radii_scale=1.0)


def test_bench_fields():
    doc = run_bench(load_config("instance_a"), queries=5, workers=2, batch_size=50).to_dict()
    assert doc["stats"]["vertices"] == 2380
    assert {"batch_50_workers_1_s", "batch_50_workers_2_s"} <= set(doc["timings"])
    assert {"build_s", "bfs_query_mean_s", "bidirectional_query_mean_s"} <= set(doc["timings"])


class TestExport:
    def test_files_and_dot(self, tmp_path, complex_a, emb_a):
        out = tmp_path / "new" / "dir"
        files = export_artifacts(load_config("instance_a"), out)
        names = {f.name for f in files}
        assert {"T0.dot", "T1.dot", "T2.dot", "complex.edges", "embed.csv", "build_log.json"} <= names
        for name, tree in (("T0.dot", complex_a.bs.tree), ("T1.dot", emb_a.quotients_[0].tree),
                           ("T2.dot", emb_a.quotients_[1].tree)):
            nodes, edges = parse_dot((out / name).read_text())
            assert len(nodes) == tree.n and sorted(edges) == [e[:2] for e in tree.edges]
        edges = (out / "complex.edges").read_text().split("\n")
        assert len([e for e in edges if e]) == complex_a.graph.n_edges
        with open(out / "embed.csv") as fh:
            assert sum(1 for _ in fh) == complex_a.n + 1

    def test_reexport_identical(self, tmp_path):
        a = export_artifacts(load_config("instance_b"), tmp_path / "a")
        b = export_artifacts(load_config("instance_b"), tmp_path / "b")
        for fa, fb in zip(a, b):
            assert fa.read_bytes() == fb.read_bytes(), fa.name
