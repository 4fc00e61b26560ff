"""Minimal in-process HTTP double for the embedding/generation services."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class ServiceDouble:
    """Configurable /embed and /generate endpoints on a local port."""

    def __init__(self, embed_dim: int = 8, generate_fn=None, embed_fn=None, status: int = 200):
        self.embed_dim = embed_dim
        self.generate_fn = generate_fn or (lambda prompts: [p[-3:] for p in prompts])
        self.embed_fn = embed_fn
        self.status = status
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                outer.requests.append({"path": self.path, "payload": payload})
                if outer.status != 200:
                    self.send_response(outer.status)
                    self.end_headers()
                    return
                if self.path == "/embed":
                    texts = payload.get("texts", [])
                    if outer.embed_fn is not None:
                        vectors = outer.embed_fn(texts)
                    else:
                        vectors = [
                            [float(len(t)), float(i)] + [0.0] * (outer.embed_dim - 2)
                            for i, t in enumerate(texts)
                        ]
                    body = {"dim": outer.embed_dim, "vectors": vectors}
                elif self.path == "/generate":
                    body = {"outputs": outer.generate_fn(payload.get("prompts", []))}
                else:
                    self.send_response(404)
                    self.end_headers()
                    return
                raw = json.dumps(body).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}"

    def __enter__(self) -> "ServiceDouble":
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
