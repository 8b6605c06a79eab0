"""A stdlib chat-completions stand-in plus the generator-CLI shim."""

from __future__ import annotations

import json
import shutil
import subprocess
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

FAMILY = "bg-i2_obj-shape_m3_text-guide"
N_TEST = 20

GENERATOR = shutil.which("boundarybench")


def run_generator(args: list[str]) -> subprocess.CompletedProcess:
    assert GENERATOR, "the generator package must be installed"
    return subprocess.run([GENERATOR, *args], capture_output=True, text=True)


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        server = self.server
        with server.lock:
            server.n_requests += 1
            n = server.n_requests
        body = self.rfile.read(int(self.headers["Content-Length"]))
        payload = json.loads(body)
        with server.lock:
            server.seen.append(
                {"payload": payload, "auth": self.headers.get("Authorization")})

        behavior = server.behavior
        if behavior.get("delay_s"):
            time.sleep(behavior["delay_s"])
        if behavior.get("always_fail") or n <= behavior.get("fail_first", 0):
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"simulated backend failure")
            return

        reply = behavior.get("reply", "Yes")
        text = reply(payload) if callable(reply) else reply
        doc = json.dumps(
            {"choices": [{"message": {"role": "assistant", "content": text}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(doc)))
        self.end_headers()
        self.wfile.write(doc)

    def log_message(self, *args):   # keep test output readable
        pass


class MockEndpoint:
    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.server.lock = threading.Lock()
        self.server.behavior = {}
        self.server.seen = []
        self.server.n_requests = 0
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_port}/v1/chat/completions"

    @property
    def seen(self) -> list[dict]:
        return self.server.seen

    def configure(self, **behavior):
        self.server.behavior = behavior
        self.server.seen = []
        self.server.n_requests = 0

    def close(self):
        self.server.shutdown()
        self.server.server_close()
