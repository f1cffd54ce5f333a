"""Command line front door: run sessions, merge and compare logs, serve the console."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cluster import (
    ConfigError,
    compare_logs,
    load_config,
    merge_logs,
    run_session,
)
from .runtime.producer import ScriptError, SessionError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _cmd_run(args) -> int:
    config = load_config(args.config)
    script_path = Path(args.script) if args.script else config.script_path
    if script_path is None:
        print("error: no --script given and the config names none", file=sys.stderr)
        return EXIT_FAILURE
    script = script_path.read_text(encoding="utf-8").splitlines()
    logs = run_session(config, script)
    for path in logs:
        print(path)
    return EXIT_OK


def _cmd_merge(args) -> int:
    merged = merge_logs([Path(p) for p in args.logs])
    out = sys.stdout if args.out is None else open(args.out, "w", encoding="utf-8")
    try:
        for event in merged:
            out.write(json.dumps(event, separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_compare(args) -> int:
    left = merge_logs([Path(args.left)])
    right = merge_logs([Path(args.right)])
    divergence = compare_logs(left, right, tolerance=args.tolerance)
    if divergence is None:
        print(f"equivalent ({len(left)} events)")
        return EXIT_OK
    print(f"diverge at event {divergence.index}: {divergence.reason}")
    print(f"  left:  {json.dumps(divergence.left)}")
    print(f"  right: {json.dumps(divergence.right)}")
    return EXIT_FAILURE


def _cmd_demo(args) -> int:
    from .fixtures import write_demo_workspace

    paths = write_demo_workspace(Path(args.dir))
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_console(args) -> int:
    import uvicorn

    from .console import create_app

    ui_dir = Path(args.ui) if args.ui else None
    if ui_dir is not None and not (ui_dir / "index.html").is_file():
        print(f"error: no index.html under {ui_dir}", file=sys.stderr)
        return EXIT_FAILURE
    app = create_app(Path(args.storage), ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensegraph")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run a scripted cluster session")
    p.add_argument("--config", required=True, help="cluster config JSON")
    p.add_argument("--script", help="session script file (default: the config's script)")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("merge", help="merge event logs into one canonical stream")
    p.add_argument("logs", nargs="+", help="event log files (JSONL)")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(fn=_cmd_merge)

    p = sub.add_parser("compare", help="compare two event logs after normalization")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("demo", help="write the demo scene, mapping, script and configs")
    p.add_argument("--dir", required=True)
    p.set_defaults(fn=_cmd_demo)

    p = sub.add_parser("console", help="serve the operator console API")
    p.add_argument("--storage", required=True, help="shared storage directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8800)
    p.add_argument("--ui", help="directory with the built browser UI, served at /ui/")
    p.set_defaults(fn=_cmd_console)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ScriptError, SessionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
