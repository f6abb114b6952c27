#!/usr/bin/env python3
"""Minimal embedding service for the `embedding` matcher backend.

POST a JSON array of strings, receive a JSON array of equal-length float vectors.

    python3 tools/embedding_server.py --model sentence-transformers/stsb-mpnet-base-v2 --port 8089
    # then: embedding_url = http://127.0.0.1:8089/embed
"""

import argparse
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from sentence_transformers import SentenceTransformer


def make_handler(model, token):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if token and self.headers.get("Authorization") != f"Bearer {token}":
                return self._reply(401, {"error": "unauthorized"})
            try:
                texts = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            except json.JSONDecodeError as e:
                return self._reply(400, {"error": str(e)})
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                return self._reply(400, {"error": "expected a JSON array of strings"})
            vectors = model.encode(texts, convert_to_numpy=True) if texts else []
            self._reply(200, [[float(x) for x in v] for v in vectors])

        def _reply(self, status, payload):
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="sentence-transformers/stsb-mpnet-base-v2")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8089)
    parser.add_argument("--token", default="", help="require this bearer token")
    args = parser.parse_args()
    server = ThreadingHTTPServer((args.host, args.port), make_handler(SentenceTransformer(args.model), args.token))
    print(f"serving {args.model} on http://{args.host}:{args.port}/", flush=True)
    server.serve_forever()


if __name__ == "__main__":
    main()
