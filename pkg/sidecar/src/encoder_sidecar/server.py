"""TCP service speaking the embedding provider wire protocol.

Line-delimited JSON requests and responses:

    {"first": str,   "second": str,   "max_first": 254, "max_second": 255}
        -> {"vector": [768 numbers]}
    {"first": [str], "second": [str], "max_first": 254, "max_second": 255}
        -> {"vectors": [[768 numbers], ...]}   (order-preserving)
    {"op": "health"} -> {"status": "ok" | "loading", "model": name}

Bad requests get {"error": msg} on the same line; the connection stays open.
The listener starts accepting immediately while the encoder loads in the
background; embed requests block until it is ready.  Requests are handled
serially, so responses are deterministic within one process lifetime.
"""

from __future__ import annotations

import argparse
import json
import socketserver
import sys
import threading

import numpy as np

from .encoders import load_encoder


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for line in self.rfile:
            if not line.strip():
                continue
            try:
                response = self.server.dispatch(json.loads(line))
            except Exception as exc:  # malformed input must not kill the server
                response = {"error": f"{type(exc).__name__}: {exc}"}
            self.wfile.write(json.dumps(response).encode("utf-8") + b"\n")
            self.wfile.flush()


class EncoderServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, encoder_factory, model_name: str):
        super().__init__(address, _Handler)
        self.model_name = model_name
        self._encoder = None
        self._ready = threading.Event()
        self._load_error: Exception | None = None
        self._serial = threading.Lock()
        self._loader = threading.Thread(target=self._load, args=(encoder_factory,), daemon=True)
        self._loader.start()

    def _load(self, factory):
        try:
            self._encoder = factory()
        except Exception as exc:
            self._load_error = exc
        finally:
            self._ready.set()

    def wait_ready(self, timeout=None) -> bool:
        ok = self._ready.wait(timeout)
        if ok and self._load_error is not None:
            raise self._load_error
        return ok

    def dispatch(self, request: dict) -> dict:
        if request.get("op") == "health":
            status = "ok" if self._ready.is_set() and self._load_error is None else "loading"
            return {"status": status, "model": self.model_name}
        if "first" not in request or "second" not in request:
            return {"error": "request needs 'first' and 'second' (or op: health)"}
        self._ready.wait()
        if self._load_error is not None:
            return {"error": f"encoder failed to load: {self._load_error}"}
        max_first = int(request.get("max_first", 254))
        max_second = int(request.get("max_second", 255))
        first, second = request["first"], request["second"]
        with self._serial:
            if isinstance(first, list) or isinstance(second, list):
                if not isinstance(first, list) or not isinstance(second, list):
                    return {"error": "batch requests need arrays in both 'first' and 'second'"}
                if len(first) != len(second):
                    return {"error": f"batch length mismatch: {len(first)} vs {len(second)}"}
                vectors = self._encoder.encode_batch(first, second, max_first, max_second)
                return {"vectors": [self._finite(v).tolist() for v in vectors]}
            vector = self._encoder.encode_pair(first, second, max_first, max_second)
            return {"vector": self._finite(vector).tolist()}

    @staticmethod
    def _finite(vector) -> np.ndarray:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (768,) or not np.all(np.isfinite(vec)):
            raise RuntimeError("encoder produced an invalid vector")
        return vec


def serve(host: str, port: int, model_name: str, announce=sys.stderr):
    server = EncoderServer((host, port), lambda: load_encoder(model_name), model_name)
    bound_host, bound_port = server.server_address
    print(f"listening on {bound_host}:{bound_port}", file=announce, flush=True)
    try:
        server.wait_ready()  # refuse to serve embeddings with a broken model
    except Exception as exc:
        server.server_close()
        print(f"error: failed to load model {model_name!r}: {exc}", file=sys.stderr)
        return 1
    print(f"model {model_name} ready", file=announce, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="encoder-sidecar",
        description="Serve pair embeddings over the provider wire protocol.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7768)
    parser.add_argument(
        "--model",
        default="seeded-projection",
        help="builtin 'seeded-projection' or a transformers model name/path",
    )
    args = parser.parse_args(argv)
    return serve(args.host, args.port, args.model)


if __name__ == "__main__":
    sys.exit(main())
