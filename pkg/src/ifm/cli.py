"""Command-line interface: validate, analyze, trace, whatif, serve.

Exit codes are CI-friendly: 0 means success with nothing open, 1 means
open or conditional findings exist, 2 is a usage error, 3 a parse or
validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    DEFAULT_MAX_PATHS,
    EditError,
    Mode,
    Verdict,
    assess_all,
    parse_edit,
    trace_paths,
    what_if,
)
from .dsl import ParseResult, SourceModel, format_diagnostic, parse_files
from .reporting import (
    build_report,
    export_json,
    render_csv,
    render_dot,
    render_markdown,
    whatif_json,
)

OK = 0
FINDINGS = 1
USAGE = 2
INVALID = 3


def _color_enabled() -> bool:
    return sys.stderr.isatty() and not os.environ.get("IFM_NO_COLOR")


def _print_diagnostics(result: ParseResult) -> None:
    color = _color_enabled()
    for d in result.diagnostics:
        text = format_diagnostic(d)
        if color and d.severity == "error":
            text = f"\033[31m{text}\033[0m"
        elif color and d.severity == "warning":
            text = f"\033[33m{text}\033[0m"
        print(text, file=sys.stderr)


def _load(model_path: str, outcomes_path: str | None) -> SourceModel | int:
    """Parse the model (and outcome fragment); an int is an exit status."""
    paths = [model_path] + ([outcomes_path] if outcomes_path else [])
    for p in paths:
        if not Path(p).is_file():
            print(f"error: no such file: {p}", file=sys.stderr)
            return USAGE
    result = parse_files(*paths)
    _print_diagnostics(result)
    if not result.ok:
        return INVALID
    return result.model


def _write_output(text_or_bytes: str | bytes, out: str | None) -> None:
    if out:
        mode = "wb" if isinstance(text_or_bytes, bytes) else "w"
        with open(out, mode) as handle:
            handle.write(text_or_bytes)
    elif isinstance(text_or_bytes, bytes):
        sys.stdout.buffer.write(text_or_bytes)
    else:
        sys.stdout.write(text_or_bytes)


def cmd_validate(args: argparse.Namespace) -> int:
    loaded = _load(args.model, None)
    if isinstance(loaded, int):
        return loaded
    print(f"{args.model}: valid "
          f"({len(loaded.network.sites)} sites, "
          f"{len(loaded.network.channels)} channels)")
    return OK


def cmd_analyze(args: argparse.Namespace) -> int:
    loaded = _load(args.model, args.outcomes)
    if isinstance(loaded, int):
        return loaded
    if not loaded.outcomes:
        print("error: no outcomes declared; pass --outcomes",
              file=sys.stderr)
        return USAGE
    matrix = assess_all(loaded.network, list(loaded.outcomes),
                        args.max_paths)
    if args.config != "all":
        selected = tuple(c for c in matrix.configurations
                         if c.name == args.config)
        if not selected:
            names = [c.name for c in matrix.configurations]
            print(f"error: unknown configuration {args.config!r}; "
                  f"choose from {names}", file=sys.stderr)
            return USAGE
        from dataclasses import replace
        matrix = replace(matrix, configurations=selected)
    doc = build_report(loaded, matrix)

    if args.format == "md":
        _write_output(render_markdown(doc), args.out)
    elif args.format == "csv":
        _write_output(render_csv(doc), args.out)
    elif args.format == "json":
        _write_output(export_json(doc), args.out)
    else:
        _write_output(render_dot(doc, highlight=args.highlight), args.out)

    if args.figure_dir:
        from .figures import render_figures
        for path in render_figures(doc, args.figure_dir):
            print(f"wrote {path}", file=sys.stderr)

    return OK if matrix.strictest() is Verdict.CLOSED else FINDINGS


def cmd_trace(args: argparse.Namespace) -> int:
    loaded = _load(args.model, args.outcomes)
    if isinstance(loaded, int):
        return loaded
    network = loaded.network
    if network.alternatives:
        from .model import expand_configurations
        configs = expand_configurations(network)
        chosen = next((c for c in configs if c.name == args.config), None)
        if chosen is None:
            names = [c.name for c in configs]
            print(f"error: model has alternatives; pick --config from "
                  f"{names}", file=sys.stderr)
            return USAGE
        network = chosen.network
    mode = Mode.OPTIMISTIC if args.mode == "optimistic" else Mode.PESSIMISTIC
    try:
        result = trace_paths(network, args.origin, args.target, args.tag,
                             mode, args.max)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return USAGE
    for path in result.paths:
        line = " -> ".join(path.channels)
        if path.blockers:
            line += f"   [blocked by {', '.join(path.blockers)}]"
        print(line)
    if result.truncated:
        print(f"(truncated at {args.max} paths)", file=sys.stderr)
    print(f"{len(result.paths)} path(s) carry {args.tag!r} "
          f"from {args.origin} to {args.target} ({mode.value})",
          file=sys.stderr)
    return FINDINGS if result.paths else OK


def cmd_whatif(args: argparse.Namespace) -> int:
    loaded = _load(args.model, args.outcomes)
    if isinstance(loaded, int):
        return loaded
    if not loaded.outcomes:
        print("error: no outcomes declared; pass --outcomes",
              file=sys.stderr)
        return USAGE
    try:
        edits = [parse_edit(spec) for spec in args.edit]
    except EditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    try:
        delta = what_if(loaded.network, edits, list(loaded.outcomes),
                        args.max_paths)
    except EditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    if args.format == "json":
        _write_output(whatif_json(delta), args.out)
        return OK
    if not delta.changes:
        print("no assessment changes")
        return OK
    for change in delta.changes:
        before = change.before.value if change.before else "-"
        after = change.after.value if change.after else "-"
        print(f"[{change.configuration}] {change.outcome_id}: "
              f"{before} -> {after}")
        for seq in change.opened_paths:
            print(f"  now open: {' -> '.join(seq)}")
        for seq in change.closed_paths:
            print(f"  now closed: {' -> '.join(seq)}")
    return OK


def cmd_serve(args: argparse.Namespace) -> int:
    loaded = _load(args.model, args.outcomes)
    if isinstance(loaded, int):
        return loaded
    from .server import serve
    try:
        serve(loaded, host=args.bind, port=args.port,
              ui_dir=args.ui_dir, max_paths=args.max_paths)
    except OSError as exc:
        print(f"error: cannot bind {args.bind}:{args.port}: {exc}",
              file=sys.stderr)
        return USAGE
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifm",
        description="Information-flow model analysis: map where potential "
                    "bias can travel and which impact queries stay open.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a model and check its laws")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="assess outcomes and render a report")
    p.add_argument("model")
    p.add_argument("--outcomes", help="outcome declarations file")
    p.add_argument("--format", choices=["md", "csv", "json", "dot"],
                   default="md")
    p.add_argument("--config", default="all",
                   help="configuration name, or 'all'")
    p.add_argument("--highlight", help="outcome id to mark in DOT output")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--figure-dir",
                   help="also render figures into this directory")
    p.add_argument("--max-paths", type=int, default=DEFAULT_MAX_PATHS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("trace", help="enumerate surviving paths of a tag")
    p.add_argument("model")
    p.add_argument("--outcomes")
    p.add_argument("--from", dest="origin", required=True,
                   help="origin site or channel id")
    p.add_argument("--to", dest="target", required=True,
                   help="target site id")
    p.add_argument("--tag", required=True)
    p.add_argument("--mode", choices=["optimistic", "pessimistic"],
                   default="pessimistic")
    p.add_argument("--max", type=int, default=DEFAULT_MAX_PATHS)
    p.add_argument("--config", default="default",
                   help="configuration to trace when alternatives exist")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("whatif", help="compare assessments before and "
                                      "after edits")
    p.add_argument("model")
    p.add_argument("--outcomes")
    p.add_argument("--edit", action="append", default=[],
                   help="edit spec, e.g. remove-mitigation:b1.normalize "
                        "or remove-introduce:b6:location_advantage")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--max-paths", type=int, default=DEFAULT_MAX_PATHS)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="serve the model and assessments "
                                     "over local HTTP")
    p.add_argument("model")
    p.add_argument("--outcomes")
    p.add_argument("--port", type=int, default=8851)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--ui-dir", help="static files to serve at /")
    p.add_argument("--max-paths", type=int, default=DEFAULT_MAX_PATHS)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return USAGE if exc.code not in (0, None) else OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
