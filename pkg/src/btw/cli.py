"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 replay
assertion failure. Machine-readable lines go to stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import signal
import sys
from pathlib import Path

from .config import load_config
from .errors import BtwError
from .layouts import LayoutStore, builtin_presets, parse_layout, serialize_layout
from .replay import parse_script, run_script
from .server import run_server

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_REPLAY_FAILED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="btw", description="Mirror a live webpage into synchronized workspace panels.")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the panel server")
    serve.add_argument("--url", help="page to mirror (default mock://grid)")
    serve.add_argument("--bridge", choices=["mock", "devtools"], help="browser bridge implementation")
    serve.add_argument("--devtools-endpoint", dest="devtools_endpoint", help="remote-debugging endpoint, e.g. http://127.0.0.1:9222")
    serve.add_argument("--host", help="bind address (default 127.0.0.1)")
    serve.add_argument("--port", type=int, help="TCP port (default 7420; 0 = OS-assigned)")
    serve.add_argument("--layout-dir", dest="layout_dir", help="directory of .btwlayout files")
    serve.add_argument("--layout", help="layout name (default: match by URL)")
    serve.add_argument("--token", help="require this token from clients")
    serve.add_argument("--max-fps", dest="max_fps", type=int, help="capture rate cap (default 15)")
    serve.add_argument("--frame-format", dest="frame_format", choices=["raw", "png"], help="panel frame payload format")
    serve.add_argument("--no-auto-scroll", action="store_true", help="reject out-of-viewport input instead of scrolling")
    serve.add_argument("--config", help="config file (JSON)")

    replay = sub.add_parser("replay", help="run a .btwscript against the mock bridge")
    replay.add_argument("script", help="script file")
    replay.add_argument("--layout-dir", dest="layout_dir", help="directory of .btwlayout files")
    replay.add_argument("--report", help="also write the report to this file")

    layout = sub.add_parser("layout", help="inspect and validate layout documents")
    layout_sub = layout.add_subparsers(dest="layout_command", required=True)
    validate = layout_sub.add_parser("validate", help="validate layout files (default: built-in presets)")
    validate.add_argument("files", nargs="*", help="layout files; none = built-ins")
    show = layout_sub.add_parser("show", help="print canonical serialization")
    show.add_argument("target", help="preset name or layout file")
    lst = layout_sub.add_parser("list", help="list known layouts")
    lst.add_argument("--layout-dir", dest="layout_dir", help="directory of .btwlayout files")

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    flags = {
        name: getattr(args, name)
        for name in (
            "url",
            "bridge",
            "devtools_endpoint",
            "host",
            "port",
            "layout_dir",
            "layout",
            "token",
            "max_fps",
            "frame_format",
        )
        if getattr(args, name) is not None
    }
    if args.no_auto_scroll:
        flags["auto_scroll"] = False
    config = load_config(env=os.environ, config_path=args.config, flags=flags)

    async def _serve() -> None:
        loop = asyncio.get_running_loop()
        task = asyncio.ensure_future(run_server(config))
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, task.cancel)
        try:
            await task
        except asyncio.CancelledError:
            pass

    asyncio.run(_serve())
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    script = parse_script(Path(args.script).read_text(encoding="utf-8"))
    store = LayoutStore()
    if args.layout_dir:
        store.load_directory(args.layout_dir)
    report = run_script(script, store)
    text = report.to_text()
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    return EXIT_OK if report.ok else EXIT_REPLAY_FAILED


def _cmd_layout(args: argparse.Namespace) -> int:
    if args.layout_command == "validate":
        failures = 0
        if args.files:
            for name in args.files:
                try:
                    doc = parse_layout(Path(name).read_text(encoding="utf-8"))
                    print(f"OK {name} ({len(doc.panels)} panels)")
                except (OSError, BtwError) as exc:
                    failures += 1
                    print(f"INVALID {name}: {exc}")
        else:
            for doc in builtin_presets():
                parse_layout(serialize_layout(doc))  # round-trip through the parser
                print(f"OK {doc.name} ({len(doc.panels)} panels)")
        return EXIT_OK if failures == 0 else EXIT_RUNTIME
    if args.layout_command == "show":
        store = LayoutStore()
        doc = store.get(args.target)
        if doc is None:
            path = Path(args.target)
            if not path.exists():
                print(f"ERROR no preset or file named {args.target!r}", flush=True)
                return EXIT_RUNTIME
            doc = parse_layout(path.read_text(encoding="utf-8"))
        sys.stdout.write(serialize_layout(doc))
        return EXIT_OK
    store = LayoutStore()
    if args.layout_dir:
        store.load_directory(args.layout_dir)
    for name in store.names():
        print(name)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get("BTW_LOG", "INFO"))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_layout(args)
    except BtwError as exc:
        print(f"ERROR {exc}", flush=True)
        log = logging.getLogger("btw.cli")
        log.error("%s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"ERROR {exc}", flush=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
