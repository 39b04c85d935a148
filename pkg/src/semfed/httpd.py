"""HTTP surface: the service endpoints and the operator API.

Two route families share one server:

  GET  /services/{name}        -> text/turtle description document
  POST /services/{name}        -> invoke; text/turtle in, text/turtle out
  GET  /api/services           -> service table rows (JSON)
  GET  /api/changes            -> change feed, newest first (JSON or JSONL)
  GET  /api/queries            -> saved queries with plan status
  POST /api/query              -> {text} | {graph} | {name} -> binding table
  POST /api/services/{n}/rebuild -> 202 + queue position
  POST /api/ontology/versions  -> diff -> impact -> apply; returns events
  POST /api/rules/versions     -> switch the active rule file

Service-route errors are one-line plain text; /api errors use the JSON
envelope {code, message, detail}. Rebuilds queued over HTTP run on a single
background worker; clients poll GET /api/services for the outcome.
"""

from __future__ import annotations

import json
import re
import threading
from email.parser import BytesParser
from email.policy import default as default_email_policy
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional, Tuple

from .changes import NotInactive
from .errors import ParseError
from .ontology import DanglingReference
from .queries import AmbiguousPattern, DisconnectedQuery, QueryAborted, UnresolvablePattern
from .rdf import parse_turtle, serialize_turtle
from .registry import NotFound, ServiceInactive
from .rules import ArityMismatch, UnknownTable
from .workspace import Workspace, WorkspaceError

_SERVICE_ROUTE = re.compile(r"^/services/([A-Za-z0-9_\-]+)$")
_REBUILD_ROUTE = re.compile(r"^/api/services/([A-Za-z0-9_\-]+)/rebuild$")

_CONTENT_TYPES = {".html": "text/html", ".js": "text/javascript",
                  ".css": "text/css", ".map": "application/json",
                  ".svg": "image/svg+xml"}


class AppServer:
    """Wires a Workspace to a threading HTTP server plus a rebuild worker."""

    def __init__(self, workspace: Workspace, host: str = "127.0.0.1",
                 port: int = 0, ui_dir: Optional[str] = None):
        self.workspace = workspace
        self.ui_dir = Path(ui_dir) if ui_dir else None
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._worker = threading.Thread(target=self._drain_rebuilds, daemon=True)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "AppServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        self._worker.start()
        return self

    def serve_forever(self) -> None:
        self._worker.start()
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self._stop.set()
        self._wake.set()
        self.httpd.shutdown()
        self.httpd.server_close()

    def kick_rebuilds(self) -> None:
        self._wake.set()

    def _drain_rebuilds(self) -> None:
        while not self._stop.is_set():
            self._wake.wait()
            self._wake.clear()
            if self._stop.is_set():
                return
            try:
                self.workspace.run_rebuild_queue()
            except Exception:  # surfaces via service status, never kills the worker
                pass


def _make_handler(app: AppServer):
    workspace = app.workspace

    class Handler(BaseHTTPRequestHandler):
        server_version = "semfed/0.1"

        def log_message(self, fmt, *args):  # keep test output clean
            pass

        # -- plumbing -------------------------------------------------------

        def _body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length) if length else b""

        def _send(self, code: int, payload: bytes, content_type: str,
                  extra_headers=()) -> None:
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(payload)))
            for name, value in extra_headers:
                self.send_header(name, value)
            self.end_headers()
            self.wfile.write(payload)

        def _send_json(self, code: int, obj) -> None:
            self._send(code, json.dumps(obj, indent=1).encode("utf-8"),
                       "application/json")

        def _send_text(self, code: int, line: str) -> None:
            self._send(code, (line.rstrip("\n") + "\n").encode("utf-8"),
                       "text/plain; charset=utf-8")

        def _send_error_envelope(self, code: int, error_code: str,
                                 message: str, detail=None) -> None:
            self._send_json(code, {"code": error_code, "message": message,
                                   "detail": detail})

        # -- GET ------------------------------------------------------------

        def do_GET(self):
            try:
                self._route_get()
            except BrokenPipeError:
                pass

        def _route_get(self):
            path = self.path.split("?", 1)[0]
            match = _SERVICE_ROUTE.match(path)
            if match:
                return self._get_service(match.group(1))
            if path == "/api/services":
                return self._send_json(200, workspace.service_rows())
            if path == "/api/changes":
                if "format=jsonl" in (self.path.split("?", 1) + [""])[1]:
                    return self._send(200, workspace.log.export_jsonl().encode("utf-8"),
                                      "application/x-ndjson")
                return self._send_json(200, workspace.change_rows())
            if path == "/api/queries":
                return self._send_json(200, workspace.query_listing())
            if path == "/api/vocabulary":
                return self._send_json(200, workspace.vocabulary_rows())
            ui = self.ui_file(path)
            if ui is not None:
                return self._send(200, ui[0], ui[1])
            if path.startswith("/api/"):
                return self._send_error_envelope(404, "NotFound", f"no route {path}")
            return self._send_text(404, f"no route {path}")

        def ui_file(self, path: str):
            if app.ui_dir is None:
                return None
            rel = "index.html" if path in ("/", "") else path.lstrip("/")
            candidate = (app.ui_dir / rel).resolve()
            try:
                candidate.relative_to(app.ui_dir.resolve())
            except ValueError:
                return None
            if not candidate.is_file():
                return None
            ctype = _CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            return candidate.read_bytes(), ctype

        def _get_service(self, name: str):
            try:
                graph = workspace.registry.describe(name)
            except NotFound:
                return self._send_text(404, f"no service named {name}")
            self._send(200, serialize_turtle(graph).encode("utf-8"), "text/turtle")

        # -- POST -----------------------------------------------------------

        def do_POST(self):
            try:
                self._route_post()
            except BrokenPipeError:
                pass

        def _route_post(self):
            path = self.path.split("?", 1)[0]
            match = _SERVICE_ROUTE.match(path)
            if match:
                return self._invoke_service(match.group(1))
            match = _REBUILD_ROUTE.match(path)
            if match:
                return self._rebuild(match.group(1))
            if path == "/api/query":
                return self._query()
            if path == "/api/ontology/versions":
                return self._ontology_version()
            if path == "/api/rules/versions":
                return self._rules_version()
            if path.startswith("/api/"):
                return self._send_error_envelope(404, "NotFound", f"no route {path}")
            return self._send_text(404, f"no route {path}")

        def _invoke_service(self, name: str):
            try:
                input_graph = parse_turtle(self._body().decode("utf-8"))
            except (ParseError, UnicodeDecodeError) as exc:
                return self._send_text(400, f"malformed input: {exc}")
            try:
                out, warnings = workspace.registry.invoke(name, input_graph)
            except NotFound:
                return self._send_text(404, f"no service named {name}")
            except ServiceInactive as exc:
                return self._send_text(409, str(exc))
            headers = [("X-Instance-Warning", w) for w in warnings]
            self._send(200, serialize_turtle(out).encode("utf-8"),
                       "text/turtle", headers)

        def _rebuild(self, name: str):
            try:
                position = workspace.request_rebuild(name)
            except NotFound:
                return self._send_error_envelope(404, "NotFound",
                                                 f"no service named {name}")
            except NotInactive as exc:
                return self._send_error_envelope(409, "NotInactive", str(exc))
            app.kick_rebuilds()
            self._send_json(202, {"queued": name, "position": position})

        def _json_body(self) -> Optional[dict]:
            try:
                return json.loads(self._body().decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                return None

        def _query(self):
            payload = self._json_body()
            if payload is None:
                return self._send_error_envelope(400, "BadRequest",
                                                 "body must be JSON")
            try:
                if "text" in payload:
                    table = workspace.run_query_text(payload["text"])
                elif "graph" in payload:
                    table = workspace.run_query_json(payload["graph"])
                elif "name" in payload:
                    table = workspace.run_saved_query(payload["name"])
                else:
                    return self._send_error_envelope(
                        400, "BadRequest", "expected 'text', 'graph' or 'name'")
            except UnresolvablePattern as exc:
                return self._send_error_envelope(
                    422, "UnresolvablePattern", str(exc),
                    {"pattern": repr(exc.pattern), "predicate": exc.predicate})
            except AmbiguousPattern as exc:
                return self._send_error_envelope(
                    422, "AmbiguousPattern", str(exc),
                    {"pattern": repr(exc.pattern), "candidates": list(exc.candidates)})
            except QueryAborted as exc:
                return self._send_error_envelope(409, "QueryAborted", str(exc))
            except (ParseError, DisconnectedQuery, WorkspaceError) as exc:
                return self._send_error_envelope(400, type(exc).__name__, str(exc))
            self._send_json(200, table.as_json())

        def _read_upload(self):
            """Uploads arrive as JSON {slot?, text|version, version?} or
            multipart/form-data with 'file' and 'slot' fields."""
            ctype = self.headers.get("Content-Type", "")
            if ctype.startswith("multipart/form-data"):
                raw = b"Content-Type: " + ctype.encode("ascii") + b"\r\n\r\n" + self._body()
                message = BytesParser(policy=default_email_policy).parsebytes(raw)
                fields = {}
                for part in message.iter_parts():
                    name = part.get_param("name", header="content-disposition")
                    if not name:
                        continue
                    value = part.get_payload(decode=True)
                    fields[name] = value.decode("utf-8") if value is not None else ""
                    filename = part.get_filename()
                    if name == "file" and filename:
                        fields.setdefault("version", Path(filename).stem)
                return fields
            payload = self._json_body()
            return payload if isinstance(payload, dict) else None

        def _ontology_version(self):
            fields = self._read_upload()
            if not fields:
                return self._send_error_envelope(400, "BadRequest",
                                                 "expected JSON or multipart body")
            slot = fields.get("slot")
            if slot not in ("domain", "service"):
                return self._send_error_envelope(
                    400, "BadRequest", "slot must be 'domain' or 'service'")
            version = fields.get("version") or "uploaded"
            try:
                if fields.get("file") is not None or fields.get("text") is not None:
                    text = fields.get("file") if fields.get("file") is not None \
                        else fields.get("text")
                    events = workspace.apply_ontology_version(slot, text, version)
                else:
                    events = workspace.apply_ontology_file(slot, version)
            except (ParseError, DanglingReference, WorkspaceError) as exc:
                return self._send_error_envelope(422, type(exc).__name__, str(exc))
            self._send_json(200, {"slot": slot, "version": version,
                                  "events": [e.to_json() for e in events]})

        def _rules_version(self):
            fields = self._read_upload()
            if not fields:
                return self._send_error_envelope(400, "BadRequest",
                                                 "expected JSON or multipart body")
            version = fields.get("version") or "uploaded"
            try:
                if fields.get("file") is not None or fields.get("text") is not None:
                    text = fields.get("file") if fields.get("file") is not None \
                        else fields.get("text")
                    workspace.use_rules_text(text, version)
                else:
                    workspace.use_rules(version)
            except (ParseError, ArityMismatch, UnknownTable, WorkspaceError) as exc:
                return self._send_error_envelope(422, type(exc).__name__, str(exc))
            self._send_json(200, {"active_rules": version})

    return Handler
