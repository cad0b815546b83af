import copy
import json

import pytest

from threetrees.config import InstanceConfig, fixture_names, load_config
from threetrees.exceptions import ConfigError, PieceError
from threetrees.generate import build_instance, generate_instance, pants_slots, bass_serre_from_config

BASE = {
    "bsTree": {"edges": [[0, 1], [1, 2]]},
    "pieceKind": "synthetic",
    "perPiece": {"base": {"kind": "regular", "valence": 3}, "lines": "seeded"},
    "radii": {"base": 3, "line": 4, "fiber": 4},
    "margin": 1,
    "sampleCount": 10,
    "seed": 0,
}


def with_(path, value):
    cfg = copy.deepcopy(BASE)
    node = cfg
    for key in path[:-1]:
        node = node[key]
    if value is KeyError:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return cfg


def test_valid():
    cfg = InstanceConfig.from_dict(BASE)
    assert cfg.to_dict() == BASE


@pytest.mark.parametrize("raw", [
    with_(["extra"], 1),
    with_(["perPiece", "colour"], "red"),
    with_(["perPiece", "base", "depth"], 2),
    with_(["radii", "extra"], 1),
    with_(["seed"], KeyError),
    with_(["bsTree"], {"edges": []}),
    with_(["bsTree"], {"edges": [[0, 1]], "valence": 3}),
    with_(["bsTree"], {"edges": [[0, "a"]]}),
    with_(["pieceKind"], "torus"),
    with_(["perPiece", "lines"], "random"),
    with_(["radii", "line"], -1),
    with_(["margin"], 5),
    with_(["seed"], True),
    with_(["sampleCount"], 1.5),
    [1, 2],
])
def test_rejected(raw):
    with pytest.raises(ConfigError):
        InstanceConfig.from_dict(raw)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config("no_such_fixture")


def test_load_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(BASE))
    assert load_config(path) == InstanceConfig.from_dict(BASE)


def test_fixtures_load():
    names = fixture_names()
    assert {"instance_a", "instance_b", "instance_b_large", "negative_broken_shadow",
            "negative_missing_gluing"} <= set(names)
    for name in names:
        load_config(name)


def test_scaled():
    cfg = InstanceConfig.from_dict(BASE).scaled(1.5)
    assert cfg.radii == {"base": 5, "line": 6, "fiber": 6}


def test_named_instances():
    a = bass_serre_from_config(load_config("instance_a"))
    b = bass_serre_from_config(load_config("instance_b"))
    assert a.n == 3 and a.tree.degree(1) == 2
    assert b.n == 10


def test_seeded_generation_is_deterministic():
    cfg = load_config("instance_b")
    i1, i2 = generate_instance(cfg), generate_instance(cfg)
    for v in i1.pieces:
        for e in i1.pieces[v].lines:
            assert i1.pieces[v].lines[e].shadow.params.tolist() == i2.pieces[v].lines[e].shadow.params.tolist()


def test_prefix_stable_under_scaling():
    cfg = load_config("instance_a")
    small, big = generate_instance(cfg), generate_instance(cfg.scaled(2))
    for v, p in small.pieces.items():
        for e, line in p.lines.items():
            r = line.radius
            big_line = big.pieces[v].lines[e]
            labels_small = [p.base.labels[b] for b in line.shadow.params]
            labels_big = [big.pieces[v].base.labels[b] for b in big_line.shadow.params[big_line.radius - r:big_line.radius + r + 1]]
            assert labels_small == labels_big


def test_pants_capacity():
    cfg = InstanceConfig.from_dict({**BASE, "pieceKind": "pants", "perPiece": {},
                                    "bsTree": {"edges": [[0, 1], [0, 2], [0, 3], [0, 4]]}})
    with pytest.raises(PieceError):
        build_instance(cfg)


def test_pants_slots_share_speed():
    bs = bass_serre_from_config(load_config("pants_path"))
    slots = pants_slots(bs)
    for e, (u, v) in enumerate(bs.edges):
        for w in (u, v):
            others = [slots[(x, bs.edge_id(x, w))] == 2 for x in bs.tree.neighbors(w)]
            assert len(set(others)) == 1
