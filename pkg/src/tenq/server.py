"""Local HTTP service over an itemization output directory.

Read endpoints list filings and serve item text; write endpoints record
human edits and candidate labels. Originals are never mutated: edits live
in an append-only overlay log, so re-running the pipeline cannot destroy
human work, and every edit is auditable.

API (JSON bodies, UTF-8), versioned under /v1:

    GET  /v1/filings
    GET  /v1/filings/{doc_id}
    GET  /v1/filings/{doc_id}/items/{key}
    PUT  /v1/filings/{doc_id}/items/{key}        {"text": ...}
    GET  /v1/filings/{doc_id}/candidates
    GET  /v1/filings/{doc_id}/export?format=json|csv|dir
    POST /v1/labels                              LabeledExample JSON
"""

from __future__ import annotations

import json
import re
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from tenq.store import ExportFormat, Manifest, export_bytes, list_manifests, load_manifest

EDITS_LOG = "edits.jsonl"
LABELS_FILE = "labels.jsonl"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
}


class PortInUse(Exception):
    pass


class _State:
    """Shared server state: output dir, edit overlay, labels file."""

    def __init__(self, out_dir: Path) -> None:
        self.out_dir = out_dir
        self.lock = threading.Lock()
        self.edits: dict[str, str] = {}
        self._load_edits()

    def _load_edits(self) -> None:
        path = self.out_dir / EDITS_LOG
        if not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            self.edits[entry["key"]] = entry["text"]

    def manifest(self, doc_id: str) -> Manifest | None:
        path = self.out_dir / f"{doc_id}.manifest.json"
        if not path.exists():
            return None
        return load_manifest(path)

    def manifest_dict(self, manifest: Manifest) -> dict:
        d = manifest.to_dict()
        for item in d["items"]:
            if item["key"] in self.edits:
                item["method"] = "human_edited"
        return d

    def item_text(self, key: str) -> str | None:
        if key in self.edits:
            return self.edits[key]
        path = self.out_dir / f"{key}.txt"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put_edit(self, key: str, text: str) -> None:
        with self.lock:
            entry = {
                "key": key,
                "text": text,
                "edited_at": datetime.now(timezone.utc).isoformat(),
            }
            with open(self.out_dir / EDITS_LOG, "a", encoding="utf-8") as fp:
                fp.write(json.dumps(entry, ensure_ascii=False) + "\n")
            self.edits[key] = text

    def append_label(self, record: dict) -> int:
        with self.lock:
            record = dict(record)
            record["labeled_at"] = datetime.now(timezone.utc).isoformat()
            path = self.out_dir / LABELS_FILE
            with open(path, "a", encoding="utf-8") as fp:
                fp.write(json.dumps(record, ensure_ascii=False) + "\n")
            return sum(1 for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip())

    def candidates(self, doc_id: str) -> list[dict]:
        path = self.out_dir / f"{doc_id}.candidates.json"
        if not path.exists():
            return []
        return json.loads(path.read_text(encoding="utf-8"))


_ROUTES = [
    ("GET", re.compile(r"^/v1/filings$"), "list_filings"),
    ("GET", re.compile(r"^/v1/filings/([A-Za-z0-9]+)$"), "get_manifest"),
    ("GET", re.compile(r"^/v1/filings/([A-Za-z0-9]+)/items/([A-Za-z0-9_]+)$"), "get_item"),
    ("PUT", re.compile(r"^/v1/filings/([A-Za-z0-9]+)/items/([A-Za-z0-9_]+)$"), "put_item"),
    ("GET", re.compile(r"^/v1/filings/([A-Za-z0-9]+)/candidates$"), "get_candidates"),
    ("GET", re.compile(r"^/v1/filings/([A-Za-z0-9]+)/export$"), "get_export"),
    ("POST", re.compile(r"^/v1/labels$"), "post_label"),
]


class _Handler(BaseHTTPRequestHandler):
    state: _State
    ui_dir: Path | None = None

    # --- plumbing ---
    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _bytes(self, status: int, body: bytes, content_type: str, filename: str | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        if filename:
            self.send_header("Content-Disposition", f'attachment; filename="{filename}"')
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict | None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            return None

    def _dispatch(self, method: str) -> None:
        path, _, query = self.path.partition("?")
        for verb, pattern, name in _ROUTES:
            if verb != method:
                continue
            m = pattern.match(path)
            if m:
                getattr(self, name)(*m.groups(), query=query)
                return
        if method == "GET" and self.ui_dir is not None:
            self._serve_static(path)
            return
        self._json(404, {"error": f"no such endpoint: {method} {path}"})

    def do_GET(self) -> None:  # noqa: N802
        self._dispatch("GET")

    def do_PUT(self) -> None:  # noqa: N802
        self._dispatch("PUT")

    def do_POST(self) -> None:  # noqa: N802
        self._dispatch("POST")

    def _serve_static(self, path: str) -> None:
        assert self.ui_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            self._json(404, {"error": f"not found: {path}"})
            return
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._bytes(200, target.read_bytes(), ctype)

    # --- endpoints ---
    def list_filings(self, query: str = "") -> None:
        filings = []
        for manifest in list_manifests(self.state.out_dir):
            filings.append(
                {
                    "filing_id": manifest.filing_id,
                    "document_id": manifest.document_id,
                    "format": manifest.format,
                    "split_source": manifest.split_source,
                    "n_items": len(manifest.items),
                    "outcomes": manifest.outcomes,
                }
            )
        self._json(200, {"filings": filings})

    def get_manifest(self, doc_id: str, query: str = "") -> None:
        manifest = self.state.manifest(doc_id)
        if manifest is None:
            self._json(404, {"error": f"no filing {doc_id}"})
            return
        self._json(200, self.state.manifest_dict(manifest))

    def get_item(self, doc_id: str, key: str, query: str = "") -> None:
        manifest = self.state.manifest(doc_id)
        if manifest is None or key not in manifest.keys():
            self._json(404, {"error": f"no item {key}"})
            return
        text = self.state.item_text(key)
        method = "human_edited" if key in self.state.edits else next(
            it["method"] for it in manifest.items if it["key"] == key
        )
        self._json(200, {"key": key, "text": text, "method": method})

    def put_item(self, doc_id: str, key: str, query: str = "") -> None:
        manifest = self.state.manifest(doc_id)
        if manifest is None or key not in manifest.keys():
            self._json(404, {"error": f"no item {key}"})
            return
        body = self._body()
        if body is None or not isinstance(body.get("text"), str):
            self._json(400, {"error": "body must be JSON with a string 'text' field"})
            return
        self.state.put_edit(key, body["text"])
        self._json(200, {"ok": True, "key": key, "method": "human_edited"})

    def get_candidates(self, doc_id: str, query: str = "") -> None:
        manifest = self.state.manifest(doc_id)
        if manifest is None:
            self._json(404, {"error": f"no filing {doc_id}"})
            return
        self._json(200, {"candidates": self.state.candidates(doc_id)})

    def get_export(self, doc_id: str, query: str = "") -> None:
        manifest = self.state.manifest(doc_id)
        if manifest is None:
            self._json(404, {"error": f"no filing {doc_id}"})
            return
        params = dict(p.split("=", 1) for p in query.split("&") if "=" in p)
        fmt_name = params.get("format", "json")
        try:
            fmt = ExportFormat(fmt_name)
        except ValueError:
            self._json(400, {"error": f"unknown export format: {fmt_name}"})
            return
        name, body = export_bytes(self.state.out_dir, manifest, fmt)
        ctype = {
            ExportFormat.JSON_BUNDLE: "application/json",
            ExportFormat.CSV: "text/csv; charset=utf-8",
            ExportFormat.PLAIN_DIR: "application/zip",
        }[fmt]
        self._bytes(200, body, ctype, filename=name)

    def post_label(self, query: str = "") -> None:
        body = self._body()
        if body is None or "label" not in body:
            self._json(400, {"error": "body must be JSON with a 'label' field"})
            return
        count = self.state.append_label(body)
        self._json(200, {"ok": True, "count": count})


def make_server(out_dir: Path | str, port: int, ui_dir: Path | str | None = None) -> ThreadingHTTPServer:
    """Bind the service (port 0 picks an ephemeral port). Caller runs
    ``serve_forever`` (typically on a thread) and ``shutdown`` to stop."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    handler = type(
        "Handler",
        (_Handler,),
        {"state": _State(out_dir), "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    try:
        return ThreadingHTTPServer(("127.0.0.1", port), handler)
    except OSError as exc:
        raise PortInUse(f"cannot bind port {port}: {exc}") from exc


def serve_forever(out_dir: Path | str, port: int, ui_dir: Path | str | None = None) -> None:
    server = make_server(out_dir, port, ui_dir)
    host, bound_port = server.server_address[:2]
    print(f"serving {out_dir} on http://{host}:{bound_port}/ (Ctrl+C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
