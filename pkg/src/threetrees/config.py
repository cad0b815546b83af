"""Instance configuration: a JSON document with a fixed, fail-closed schema."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

from .exceptions import ConfigError

__all__ = ["InstanceConfig", "load_config", "fixture_names"]

_TOP_KEYS = {"bsTree", "pieceKind", "perPiece", "radii", "margin", "sampleCount", "seed"}
_BS_KEYS = ({"edges"}, {"edges", "vertices"}, {"valence", "depth"})
_PER_PIECE_KEYS = {"base", "lines"}
_BASE_KINDS = {"regular": {"kind", "valence"}, "path": {"kind"}, "edges": {"kind", "edges"}}
_LINE_POLICIES = ("seeded", "identity", "broken-shadow", "drop-line")
_RADII_KEYS = {"base", "line", "fiber"}


def _reject_unknown(where: str, got: dict, allowed: set):
    extra = set(got) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _int(where, value, lo=0):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"{where} must be an integer >= {lo}, got {value!r}")
    return value


@dataclass(frozen=True)
class InstanceConfig:
    bsTree: dict
    pieceKind: str
    perPiece: dict
    radii: dict
    margin: int
    sampleCount: int
    seed: int

    @classmethod
    def from_dict(cls, raw: dict) -> "InstanceConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown("config", raw, _TOP_KEYS)
        missing = _TOP_KEYS - set(raw)
        if missing:
            raise ConfigError(f"missing keys in config: {sorted(missing)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        bs = self.bsTree
        if not isinstance(bs, dict) or set(bs) not in _BS_KEYS:
            raise ConfigError("bsTree must be {edges[, vertices]} or {valence, depth}")
        if "edges" in bs:
            edges = bs["edges"]
            if not isinstance(edges, list) or not all(
                isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and x >= 0 for x in e) for e in edges
            ):
                raise ConfigError("bsTree.edges must be a list of [u, v] pairs")
            n = _int("bsTree.vertices", bs.get("vertices", 1 + max((max(e) for e in edges), default=-1)), 0)
            if n == 0:
                raise ConfigError("empty Bass-Serre tree")
        else:
            _int("bsTree.valence", bs["valence"], 2)
            _int("bsTree.depth", bs["depth"], 0)
        if self.pieceKind not in ("synthetic", "pants"):
            raise ConfigError(f"pieceKind must be 'synthetic' or 'pants', got {self.pieceKind!r}")
        pp = self.perPiece
        if not isinstance(pp, dict):
            raise ConfigError("perPiece must be an object")
        _reject_unknown("perPiece", pp, _PER_PIECE_KEYS)
        base = pp.get("base", {"kind": "regular", "valence": 3})
        if not isinstance(base, dict) or base.get("kind") not in _BASE_KINDS:
            raise ConfigError(f"perPiece.base.kind must be one of {sorted(_BASE_KINDS)}")
        _reject_unknown("perPiece.base", base, _BASE_KINDS[base["kind"]])
        if base["kind"] == "regular":
            _int("perPiece.base.valence", base.get("valence"), 2)
        if pp.get("lines", "seeded") not in _LINE_POLICIES:
            raise ConfigError(f"perPiece.lines must be one of {_LINE_POLICIES}")
        r = self.radii
        if not isinstance(r, dict) or set(r) != _RADII_KEYS:
            raise ConfigError(f"radii must have exactly the keys {sorted(_RADII_KEYS)}")
        for k in _RADII_KEYS:
            _int(f"radii.{k}", r[k], 0)
        _int("margin", self.margin, 0)
        if self.margin > min(r["line"], r["fiber"]):
            raise ConfigError("margin exceeds the line/fiber radii")
        _int("sampleCount", self.sampleCount, 0)
        _int("seed", self.seed, 0)

    @property
    def base_spec(self) -> dict:
        return self.perPiece.get("base", {"kind": "regular", "valence": 3})

    @property
    def line_policy(self) -> str:
        return self.perPiece.get("lines", "seeded")

    def scaled(self, factor: float) -> "InstanceConfig":
        """Same instance with every radius multiplied by ``factor`` (rounded up)."""
        radii = {k: int(-(-v * factor // 1)) for k, v in self.radii.items()}
        return replace(self, radii=radii)

    def with_seed(self, seed: int) -> "InstanceConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return asdict(self)


def fixture_names() -> list[str]:
    root = resources.files("threetrees") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name) -> InstanceConfig:
    """Load a config file, or a shipped fixture by name (e.g. ``instance_a``)."""
    path = Path(path_or_name)
    try:
        if path.exists():
            text = path.read_text()
        else:
            res = resources.files("threetrees") / "fixtures" / f"{path_or_name}.json"
            if not res.is_file():
                raise ConfigError(f"no config file or fixture named {path_or_name!r}")
            text = res.read_text()
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path_or_name}: {err}") from err
    return InstanceConfig.from_dict(raw)
