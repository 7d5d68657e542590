"""Command-line entry point: ``pblab run|check|catalog``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .parser import ParseError, parse
from .printer import print_document
from .runner import dumps, run_document

EXIT_OK, EXIT_USAGE, EXIT_SEMANTIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def catalog_names() -> list:
    root = resources.files("pblab.dsl") / "catalog"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".pbl"))


def catalog_text(name: str) -> str:
    return (resources.files("pblab.dsl") / "catalog" / f"{name}.pbl").read_text(encoding="utf-8")


def _load(target: str) -> tuple:
    """Text and display name of a file path or a catalog fixture name."""
    p = Path(target)
    if p.is_file():
        return p.read_text(encoding="utf-8"), p.name
    if target in catalog_names():
        return catalog_text(target), f"{target}.pbl"
    raise FileNotFoundError(f"no such file or fixture: {target}")


def _error(kind: str, message: str, **extra) -> str:
    return json.dumps({"error": {"type": kind, "message": message, **extra}}, sort_keys=True, indent=2) + "\n"


def _parse_or_report(target: str):
    try:
        text, name = _load(target)
    except (OSError, UnicodeDecodeError) as e:
        sys.stdout.write(_error(type(e).__name__, str(e)))
        return None, None
    try:
        return parse(text), name
    except ParseError as e:
        pos = {"line": e.pos.line, "col": e.pos.col} if e.pos else {}
        sys.stdout.write(_error(e.kind, e.message, **pos))
        return None, None


def _seed(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("PBLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(_usage_exit(f"PBLAB_SEED must be an integer, got {env!r}"))
    return 0


def _usage_exit(message: str) -> int:
    sys.stderr.write(f"pblab: error: {message}\n")
    return EXIT_USAGE


def cmd_run(args) -> int:
    doc, name = _parse_or_report(args.file)
    if doc is None:
        return EXIT_USAGE
    report, code = run_document(doc, _seed(args.seed), args.timing, name)
    text = dumps(report)
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return code


def cmd_check(args) -> int:
    doc, _ = _parse_or_report(args.file)
    if doc is None:
        return EXIT_USAGE
    sys.stdout.write(print_document(doc))
    return EXIT_OK


def cmd_catalog(args) -> int:
    for n in catalog_names():
        sys.stdout.write(n + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pblab", description="Diffeological pseudo-bundles, gluing and pseudo-metrics.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="execute a document and print its JSON report")
    r.add_argument("file", help="a .pbl file or the name of a catalog fixture")
    r.add_argument("--json", metavar="OUT", help="also write the report to OUT")
    r.add_argument("--seed", type=int, help="sampling seed (default: $PBLAB_SEED or 0)")
    r.add_argument("--timing", action="store_true", help="add per-command wall time to the report")
    r.set_defaults(fn=cmd_run)
    c = sub.add_parser("check", help="parse only and print the canonical form")
    c.add_argument("file")
    c.set_defaults(fn=cmd_check)
    k = sub.add_parser("catalog", help="list the shipped fixtures")
    k.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
