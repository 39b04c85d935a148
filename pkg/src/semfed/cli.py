"""Command line interface.

Verbs: serve, query, diff, status, rebuild, replay-scenario. Every verb takes
--json for machine-readable output with the same payload shapes the HTTP API
uses. Verbs other than serve boot a fresh workspace from the configured
files; exit code 0 on success, 2 on domain errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from importlib import resources

from .changes import NotInactive, diff as diff_inventories, impact
from .errors import ParseError
from .ontology import inventory, load_ontology, load_service_ontology
from .queries import AmbiguousPattern, DisconnectedQuery, UnresolvablePattern
from .registry import NotFound
from .workspace import boot_workspace, replay_scenario

DOMAIN_ERRORS = (
    ParseError, DisconnectedQuery, UnresolvablePattern, AmbiguousPattern,
    NotFound, NotInactive, Exception,
)


def default_workspace() -> str:
    return str(resources.files("semfed") / "fixtures" / "core" / "workspace.json")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workspace", default=default_workspace(),
                        help="workspace config JSON (default: bundled fixture)")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semfed",
        description="Semantic data federation over relational sources")
    sub = parser.add_subparsers(dest="verb", required=True)

    serve = sub.add_parser("serve", help="boot the workspace and serve HTTP")
    _add_common(serve)
    serve.add_argument("--listen", default=None, help="host:port (overrides config)")
    serve.add_argument("--ui-dir", default=None,
                       help="directory of static dashboard assets to serve at /")

    query = sub.add_parser("query", help="run a query (file, saved name, or text)")
    _add_common(query)
    query.add_argument("query", nargs="?", default=None,
                       help="path to a .rq file, a saved-query name, "
                            "or literal query text")
    query.add_argument("--list", action="store_true", dest="list_queries",
                       help="list saved queries with their plan status")

    diffp = sub.add_parser("diff", help="diff two ontology or schema files "
                                        "into change events")
    _add_common(diffp)
    diffp.add_argument("old")
    diffp.add_argument("new")
    diffp.add_argument("--slot", choices=["domain", "service", "schema"], default=None,
                       help="file flavor (default: sniffed from content)")

    status = sub.add_parser("status", help="service status table")
    _add_common(status)

    rebuild = sub.add_parser("rebuild", help="queue and run a rebuild")
    _add_common(rebuild)
    rebuild.add_argument("name")

    replay = sub.add_parser("replay-scenario",
                            help="run the end-to-end change-management walkthrough")
    _add_common(replay)
    return parser


def _emit(args, payload, human_lines) -> None:
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        for line in human_lines:
            print(line)


def cmd_serve(args) -> int:
    from .httpd import AppServer

    ws = boot_workspace(args.workspace)
    listen = args.listen or ws.config.listen
    host, _, port = listen.partition(":")
    ws.config.listen = listen
    server = AppServer(ws, host=host or "127.0.0.1", port=int(port or 0),
                       ui_dir=args.ui_dir)
    actual = server.url
    ws.config.listen = "%s:%d" % server.address
    print(f"serving {len(ws.registry)} services on {actual}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def cmd_query(args) -> int:
    ws = boot_workspace(args.workspace)
    if args.list_queries:
        listing = ws.query_listing()
        _emit(args, listing,
              [f"{row['status']:14s} {row['name']}" for row in listing])
        return 0
    if args.query is None:
        print("query: provide a query or --list", file=sys.stderr)
        return 2
    candidate = Path(args.query)
    if candidate.is_file():
        text = candidate.read_text(encoding="utf-8")
        body = "\n".join(l for l in text.splitlines() if not l.startswith("# name:"))
        table = ws.run_query_text(body)
    elif any(sq.name == args.query for sq in ws.saved_queries):
        table = ws.run_saved_query(args.query)
    else:
        table = ws.run_query_text(args.query)
    payload = table.as_json()
    lines = ["\t".join(payload["columns"])]
    for row in payload["rows"]:
        lines.append("\t".join(cell["value"] for cell in row))
    lines.append(f"({len(payload['rows'])} rows)")
    _emit(args, payload, lines)
    return 0


def _sniff_slot(text: str) -> str:
    stripped = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    if stripped and all(l.startswith("table ") for l in stripped):
        return "schema"
    return "service" if "vocab/service#" in text else "domain"


def cmd_diff(args) -> int:
    from .relational import parse_schema

    ws = boot_workspace(args.workspace)
    old_text = Path(args.old).read_text(encoding="utf-8")
    new_text = Path(args.new).read_text(encoding="utf-8")
    slot = args.slot or _sniff_slot(new_text)
    if slot == "schema":
        events = impact(
            diff_inventories(inventory(parse_schema(old_text)),
                             inventory(parse_schema(new_text))),
            registry=ws.registry, clock=ws.clock, slot=slot,
            saved_queries=ws.parsed_queries())
    elif slot == "service":
        old = load_service_ontology(old_text, version=Path(args.old).stem)
        new = load_service_ontology(new_text, version=Path(args.new).stem)
        events = impact(diff_inventories(inventory(old), inventory(new)),
                        registry=ws.registry, clock=ws.clock, slot=slot,
                        old_service_ontology=old, new_service_ontology=new,
                        saved_queries=ws.parsed_queries())
    else:
        old_d = load_ontology(old_text, version=Path(args.old).stem)
        new_d = load_ontology(new_text, version=Path(args.new).stem)
        events = impact(diff_inventories(inventory(old_d), inventory(new_d)),
                        registry=ws.registry, clock=ws.clock, slot=slot,
                        saved_queries=ws.parsed_queries())
    payload = [e.to_json() for e in events]
    lines = []
    for e in payload:
        kind = "added" if e["entity_added"] else \
            "deleted" if e["entity_deleted"] else "renamed"
        entity = e["entity_added"] or e["entity_deleted"] or \
            "%(from)s -> %(to)s" % e["entity_renamed"]
        lines.append(f"{e['timestamp']}  {kind:8s} {entity:24s} "
                     f"services={','.join(e['affected_service']) or '-'}")
    lines.append(f"({len(payload)} events)")
    _emit(args, payload, lines)
    return 0


def cmd_status(args) -> int:
    ws = boot_workspace(args.workspace)
    rows = ws.service_rows()
    lines = []
    for r in rows:
        lines.append(f"{r['status']:8s} {r['name']:44s} "
                     f"created={r['time_of_creation']} "
                     f"rebuilt={r['time_of_rebuild'] or '-'}")
    _emit(args, rows, lines)
    return 0


def cmd_rebuild(args) -> int:
    ws = boot_workspace(args.workspace)
    ws.request_rebuild(args.name)
    outcomes = ws.run_rebuild_queue()
    payload = [{"service": o.service, "state": o.state, "detail": o.detail}
               for o in outcomes]
    _emit(args, payload,
          [f"{o.service}: {o.state} ({o.detail})" for o in outcomes])
    return 0 if all(o.state == "active" for o in outcomes) else 2


def cmd_replay(args) -> int:
    transcript = replay_scenario(args.workspace)
    lines = []
    for step in transcript["steps"]:
        detail = {k: v for k, v in step.items() if k != "step"}
        summary = json.dumps(detail)
        lines.append(f"[{step['step']}] {summary[:140]}"
                     + ("..." if len(summary) > 140 else ""))
    lines.append(transcript["summary"])
    _emit(args, transcript, lines)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": cmd_serve,
        "query": cmd_query,
        "diff": cmd_diff,
        "status": cmd_status,
        "rebuild": cmd_rebuild,
        "replay-scenario": cmd_replay,
    }
    try:
        return handlers[args.verb](args)
    except KeyboardInterrupt:
        return 130
    except DOMAIN_ERRORS as exc:
        message = f"{type(exc).__name__}: {exc}"
        if args.json:
            print(json.dumps({"code": type(exc).__name__, "message": str(exc),
                              "detail": None}))
        else:
            print(message, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
