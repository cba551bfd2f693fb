"""Local JSON HTTP service over a loaded model.

Read-only with respect to the model file: what-if requests carry the full
edit list in the body and never persist anything, so every response is a
pure function of (file content, request).  The assessments payload is
byte-identical to ``ifm analyze --format json`` on the same files.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .analysis import DEFAULT_MAX_PATHS, EditError, parse_edit, what_if
from .dsl import SourceModel
from .reporting import (
    build_report,
    export_json,
    export_json_dict,
    report_dict,
    whatif_json,
)

__all__ = ["AppContext", "make_server", "serve"]

API_PREFIX = "/api/v1"


class AppContext:
    """Everything a request needs, computed once per served model."""

    def __init__(self, model: SourceModel,
                 max_paths: int = DEFAULT_MAX_PATHS,
                 ui_dir: str | Path | None = None):
        self.model = model
        self.max_paths = max_paths
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        doc = build_report(model, max_paths=max_paths)
        self.assessments_payload = export_json(doc)
        self.model_payload = export_json_dict(report_dict(doc)["model"])

    def whatif_payload(self, edits: list[str]) -> bytes:
        parsed = [parse_edit(spec) for spec in edits]
        delta = what_if(self.model.network, parsed,
                        list(self.model.outcomes), self.max_paths)
        return whatif_json(delta)


class _Handler(BaseHTTPRequestHandler):
    context: AppContext  # set on the server class

    server_version = "ifm"
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        pass  # keep workshop consoles quiet

    def _send(self, status: int, body: bytes,
              content_type: str = "application/json; charset=utf-8") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json_error(self, status: int, message: str,
                         details: list[str] | None = None) -> None:
        payload = json.dumps({"error": message,
                              "diagnostics": details or []},
                             sort_keys=True).encode("utf-8")
        self._send(status, payload)

    def do_OPTIONS(self) -> None:  # CORS preflight for the UI dev server
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods",
                         "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        context = self.server.context  # type: ignore[attr-defined]
        path = self.path.split("?", 1)[0]
        if path == f"{API_PREFIX}/health":
            self._send(200, b'{"status":"ok"}')
        elif path == f"{API_PREFIX}/model":
            self._send(200, context.model_payload)
        elif path == f"{API_PREFIX}/assessments":
            self._send(200, context.assessments_payload)
        elif path.startswith(API_PREFIX):
            self._send_json_error(404, f"unknown endpoint {path}")
        else:
            self._serve_static(context, path)

    def _serve_static(self, context: AppContext, path: str) -> None:
        if context.ui_dir is None:
            self._send_json_error(404, "no UI assets configured; "
                                       "use the /api/v1 endpoints")
            return
        relative = path.lstrip("/") or "index.html"
        target = (context.ui_dir / relative).resolve()
        if not target.is_relative_to(context.ui_dir):
            self._send_json_error(403, "path escapes the UI directory")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json_error(404, f"no such asset {path}")
            return
        content_type = mimetypes.guess_type(str(target))[0] \
            or "application/octet-stream"
        self._send(200, target.read_bytes(), content_type)

    def do_POST(self) -> None:
        context = self.server.context  # type: ignore[attr-defined]
        path = self.path.split("?", 1)[0]
        if path != f"{API_PREFIX}/whatif":
            self._send_json_error(404, f"unknown endpoint {path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            body = json.loads(raw.decode("utf-8")) if raw else {}
        except (ValueError, UnicodeDecodeError) as exc:
            self._send_json_error(400, f"malformed JSON body: {exc}")
            return
        edits = body.get("edits")
        if not isinstance(edits, list) or \
                not all(isinstance(e, str) for e in edits):
            self._send_json_error(400, "body must be "
                                       "{\"edits\": [\"<spec>\", ...]}")
            return
        try:
            payload = context.whatif_payload(edits)
        except EditError as exc:
            details = [str(v) for v in exc.report.violations] \
                if exc.report else []
            self._send_json_error(400, str(exc), details)
            return
        self._send(200, payload)


def make_server(model: SourceModel, host: str = "127.0.0.1", port: int = 0,
                ui_dir: str | Path | None = None,
                max_paths: int = DEFAULT_MAX_PATHS) -> ThreadingHTTPServer:
    """A configured server; port 0 picks a free one (server_address[1])."""
    context = AppContext(model, max_paths=max_paths, ui_dir=ui_dir)
    server = ThreadingHTTPServer((host, port), _Handler)
    server.context = context  # type: ignore[attr-defined]
    return server


def serve(model: SourceModel, host: str = "127.0.0.1", port: int = 8851,
          ui_dir: str | Path | None = None,
          max_paths: int = DEFAULT_MAX_PATHS) -> None:
    """Run until interrupted."""
    server = make_server(model, host, port, ui_dir, max_paths)
    address = server.server_address
    print(f"serving on http://{address[0]}:{address[1]}{API_PREFIX} "
          f"(Ctrl-C stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def run_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    """Start a server on a daemon thread (used by tests and notebooks)."""
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
