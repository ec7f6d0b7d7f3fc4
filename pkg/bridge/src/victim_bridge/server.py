"""Request handling and the two transports.

Both transports answer the same JSON bodies: ``{"op": "manifest"}`` and
``{"op": "predict", "texts": [...], "context": [...]}``. Anything malformed
gets an ``{"error": "..."}`` reply and the connection stays up; only startup
problems terminate the server.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .models import ModelError, load_model, vocab_digest


@dataclass(frozen=True)
class ServerConfig:
    transport: str  # "stdio" | "http"
    model_spec: str
    port: int | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.transport not in ("stdio", "http"):
            raise ModelError(f"unknown transport {self.transport!r}")
        if self.transport == "http" and self.port is None:
            raise ModelError("http transport needs a port")


def manifest_reply(model) -> dict:
    vocab = model.vocab
    reply = {
        "labels": list(model.labels),
        "max_batch": model.max_batch,
        "vocab_digest": vocab_digest(vocab if vocab is not None else ()),
    }
    if vocab is not None:
        reply["vocab"] = list(vocab)
    return reply


def handle_request(model, obj) -> dict:
    """One request in, one reply out; every failure becomes an error reply."""
    if not isinstance(obj, dict):
        return {"error": "request is not a JSON object"}
    op = obj.get("op")
    if op is None:
        return {"error": "request missing 'op'"}
    if op == "manifest":
        return manifest_reply(model)
    if op == "predict":
        texts = obj.get("texts")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return {"error": "'texts' must be a list of strings"}
        if len(texts) > model.max_batch:
            return {"error": f"batch of {len(texts)} exceeds max_batch {model.max_batch}"}
        context = obj.get("context")
        if context is not None:
            if not isinstance(context, list) or len(context) != len(texts):
                return {"error": "'context' must match 'texts' in length"}
        try:
            probs = model.predict(texts, context=context)
        except Exception as exc:  # noqa: BLE001 -- wrapped models may raise anything
            return {"error": f"model failed: {exc}"}
        return {"probs": probs.tolist()}
    return {"error": f"unknown op {op!r}"}


def serve_stdio(model, stdin=None, stdout=None) -> None:
    """Single-threaded line loop: one JSON request per line, one reply per
    line, until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"error": f"bad JSON: {exc.msg}"}
        else:
            reply = handle_request(model, obj)
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def make_http_server(model, port: int) -> ThreadingHTTPServer:
    """POST /v1/manifest and /v1/predict; replies are ordered per connection
    because each connection is served by one thread."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # quiet by default
            pass

        def _reply(self, status: int, obj: dict) -> None:
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            if not self.path.startswith("/v1/"):
                self._reply(404, {"error": f"unknown path {self.path}"})
                return
            op = self.path[len("/v1/"):]
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw) if raw else {}
            except json.JSONDecodeError as exc:
                self._reply(200, {"error": f"bad JSON: {exc.msg}"})
                return
            if not isinstance(body, dict):
                self._reply(200, {"error": "request is not a JSON object"})
                return
            body["op"] = op
            self._reply(200, handle_request(model, body))

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve(config: ServerConfig) -> None:
    """Load the model and answer requests until terminated (stdio: EOF)."""
    model = load_model(config.model_spec)
    if config.labels is not None and tuple(config.labels) != tuple(model.labels):
        raise ModelError(
            f"configured labels {list(config.labels)} do not match model labels {list(model.labels)}")
    if config.transport == "stdio":
        serve_stdio(model)
    else:
        with make_http_server(model, config.port) as server:
            server.serve_forever()
