"""Command-line entry point.

Exit status: 0 when every check passes, 1 on an invariant or inequality
violation, 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import fixture_names, load_config
from .exceptions import ConfigError, ThreeTreesError, UnknownVertexError
from .export import write_json
from .generate import build_instance
from .harness import (
    SCHEMA_VERSION,
    export_artifacts,
    run_bench,
    run_distortion,
    run_invariants,
    special_path_ledger,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return value
    return parse


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help=f"JSON config file or shipped fixture name ({', '.join(fixture_names())})")
    common.add_argument("--out", metavar="DIR", type=Path, help="directory for reports and artifacts")
    common.add_argument("--seed", metavar="S", type=_nonneg_int, help="override the config seed")

    p = _Parser(prog="threetrees", description="Quasi-isometric embedding of glued complexes into three trees.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="build the complex and write its build log")
    sub.add_parser("invariants", parents=[common], help="run every structural invariant")
    d = sub.add_parser("distortion", parents=[common], help="measure both sides of the distance estimate")
    d.add_argument("--pairs", metavar="N", type=_positive(int), help="number of agreeing pairs (default: sampleCount)")
    d.add_argument("--radii-scale", metavar="F", type=_positive(float), default=1.5,
                   help="radius multiplier of the doubling check (default 1.5)")
    d.add_argument("--workers", type=_positive(int), default=1)
    b = sub.add_parser("bench", parents=[common], help="time construction and distance queries")
    b.add_argument("--pairs", metavar="N", type=_positive(int), default=20, help="single queries per method")
    b.add_argument("--workers", type=_positive(int))
    sub.add_parser("export", parents=[common], help="write DOT, edge list, embedding and audit files")
    sp = sub.add_parser("path", parents=[common], help="special-path ledger for one pair")
    sp.add_argument("--x", type=_nonneg_int, required=True)
    sp.add_argument("--y", type=_nonneg_int, required=True)
    return p


def _emit(report: dict, out: Path | None, name: str):
    if out is not None:
        write_json(report, out / name)
    print(json.dumps(report, indent=2, sort_keys=True, default=str))


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    if args.command == "generate":
        _, c = build_instance(cfg)
        if out is not None:
            log = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "complex": c.build_log}
            write_json(log, out / "build_log.json")
        _emit({"schema_version": SCHEMA_VERSION, "kind": "generate", "vertices": c.n,
               "edges": c.graph.n_edges, "pieces": c.bs.n,
               "identified_pairs": c.build_log["identified_pairs"]}, None, "")
        return EXIT_OK

    if args.command == "invariants":
        rep = run_invariants(cfg)
        _emit(rep.to_dict(), out, "invariants.json")
        for ch in rep.checks:
            print(f"{'PASS' if ch.passed else 'FAIL'} {ch.name}: {ch.detail}", file=sys.stderr)
        return EXIT_OK if rep.passed else EXIT_VIOLATION

    if args.command == "distortion":
        rep = run_distortion(cfg, n_pairs=args.pairs, radii_scale=args.radii_scale, workers=args.workers)
        if out is not None:
            rep.write(out)
        _emit(rep.to_dict(), None, "")
        return EXIT_OK if rep.passed else EXIT_VIOLATION

    if args.command == "bench":
        rep = run_bench(cfg, queries=args.pairs, workers=args.workers)
        _emit(rep.to_dict(), out, "bench.json")
        return EXIT_OK

    if args.command == "export":
        if out is None:
            raise ConfigError("export needs --out DIR")
        files = export_artifacts(cfg, out)
        print("\n".join(str(f) for f in files))
        return EXIT_OK

    if args.command == "path":
        ledger = special_path_ledger(cfg, args.x, args.y)
        _emit(ledger, out, "special_path.json")
        v = ledger["validation"]
        return EXIT_OK if v["valid"] and v["ledger_consistent"] and v["length"] >= ledger["distance"] else EXIT_VIOLATION
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
        return EXIT_USAGE
    try:
        return _run(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownVertexError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ThreeTreesError as err:
        # construction failures of a well-formed config are violations
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_VIOLATION
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
