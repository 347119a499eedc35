"""HTTP JSON facade over a frozen store.

Endpoints::

    POST /query          body = query wire format, optional "multi": true
    GET  /tables         table summaries (?limit=N, default 20)
    GET  /tables/{id}    one table summary
    GET  /documents      document ids with their tables
    GET  /stats          store statistics
"""
from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlsplit

from .query import QueryEngine, QueryError, answer, dumps_result, query_from_json
from .store import TripleStore

log = logging.getLogger(__name__)

DEFAULT_LIMIT = 20


def table_summary(store: TripleStore, table_id: str) -> dict:
    meta = store.table_meta(table_id)
    return {
        "table_id": table_id,
        "document_id": meta["document_id"],
        "caption": meta["caption"],
        "family": meta["family"],
        "arity": len(store.attributes(table_id)),
        "rows": len(store.rows(table_id)),
        "keys": [sorted(k.attributes) for k in store.keys(table_id)],
    }


class QueryService:
    """Request handling independent of the HTTP transport."""

    def __init__(self, store: TripleStore):
        self.store = store.freeze()
        self.engine = QueryEngine(self.store)

    def query(self, body: bytes) -> tuple[int, dict]:
        try:
            obj = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return 400, {"error": f"malformed JSON: {exc}"}
        if not isinstance(obj, dict):
            return 400, {"error": "query must be a JSON object"}
        multi = obj.pop("multi", False)
        if not isinstance(multi, bool):
            return 400, {"error": "multi must be a boolean"}
        try:
            q, _ = query_from_json(obj)
        except QueryError as exc:
            return 400, {"error": str(exc)}
        return 200, answer(self.engine, q, multi=multi)

    def tables(self, limit: int = DEFAULT_LIMIT) -> tuple[int, dict]:
        ids = self.store.tables()[:limit]
        return 200, {"tables": [table_summary(self.store, t) for t in ids]}

    def table(self, table_id: str) -> tuple[int, dict]:
        if table_id not in self.store.tables():
            return 404, {"error": f"unknown table {table_id}"}
        return 200, table_summary(self.store, table_id)

    def documents(self, limit: int = DEFAULT_LIMIT) -> tuple[int, dict]:
        docs = self.store.documents()[:limit]
        return 200, {"documents": [
            {"document_id": d, "tables": self.store.objects(d, "hasTable")} for d in docs
        ]}

    def stats(self) -> tuple[int, dict]:
        return 200, self.store.stats()


def _make_handler(service: QueryService):
    class Handler(BaseHTTPRequestHandler):
        server_version = "tabledep"
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("%s - " + fmt, self.address_string(), *args)

        def _send(self, status: int, payload: dict) -> None:
            body = (dumps_result(payload) + "\n").encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _limit(self, query: str) -> int | None:
            values = parse_qs(query).get("limit")
            if not values:
                return DEFAULT_LIMIT
            try:
                n = int(values[0])
            except ValueError:
                return None
            return n if n >= 0 else None

        def do_GET(self):
            parts = urlsplit(self.path)
            path = parts.path.rstrip("/")
            limit = self._limit(parts.query)
            if limit is None:
                return self._send(400, {"error": "limit must be a non-negative integer"})
            try:
                if path == "/tables":
                    return self._send(*service.tables(limit))
                if path.startswith("/tables/"):
                    return self._send(*service.table(unquote(path[len("/tables/"):])))
                if path == "/documents":
                    return self._send(*service.documents(limit))
                if path == "/stats":
                    return self._send(*service.stats())
            except Exception:  # noqa: BLE001
                log.exception("internal error on %s", self.path)
                return self._send(500, {"error": "internal error"})
            self._send(404, {"error": f"no route for {parts.path}"})

        def do_POST(self):
            parts = urlsplit(self.path)
            if parts.path.rstrip("/") != "/query":
                return self._send(404, {"error": f"no route for {parts.path}"})
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length)
            try:
                status, payload = service.query(body)
            except Exception:  # noqa: BLE001
                log.exception("internal error on query")
                status, payload = 500, {"error": "internal error"}
            # answers are only truncated on request, so bodies match the CLI by default
            limit = self._limit(parts.query) if "limit" in parse_qs(parts.query) else None
            if status == 200 and limit is not None:
                payload = {**payload, "answers": payload["answers"][:limit]}
            self._send(status, payload)

    return Handler


class _Server(ThreadingHTTPServer):
    # the stdlib default backlog of 5 resets bursts of concurrent clients
    request_queue_size = 128


def make_server(store: TripleStore, bind: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    server = _Server((bind, port), _make_handler(QueryService(store)))
    server.daemon_threads = True
    return server


def serve_in_thread(store: TripleStore, bind: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, base_url)."""
    server = make_server(store, bind, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}"
