"""A local chat-completions endpoint for offline runs and tests.

Candidate mode answers from an echo table (user message -> ground truth) with
``"[Final Answer]:\\n" + ground truth``. Judge mode, chosen when the system
message is the scoring rubric, applies the rubric literally to the answer and
output found in the user message: an identical output scores 1, otherwise the
score is the character-level ROUGE-L F-measure. The server also counts
concurrent requests, can inject HTTP 429 replies and checks a bearer token.
"""

from __future__ import annotations

import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .metrics import HashingEmbedder, canonical_rubric, rouge_l
from .runner import build_prompt

_JUDGE = re.compile(r"\A\[Answer\]:\n(?P<answer>.*)\n\n\[Actual Output\]:\n(?P<output>.*)\n\nScore the actual", re.S)


def echo_table(items) -> dict:
    """User message -> ground truth for (QaItem, Block) pairs."""
    return {build_prompt(qa, b).user_message(): qa.ground_truth for qa, b in items}


def literal_judge(answer: str, output: str) -> float:
    if output.strip() == answer.strip():
        return 1.0
    return round(rouge_l(answer, output), 4)


class MockEndpoint:
    """Run with ``with MockEndpoint(...) as ep: ep.url``."""

    def __init__(self, echo: dict | None = None, api_key: str | None = None, fail_first: int = 0,
                 fail_status: int = 429, delay_s: float = 0.0, strip_marker=None, judge_reply: str | None = None,
                 default_reply: str = "[Final Answer]:\nUnknown."):
        self.echo = dict(echo or {})
        self.api_key = api_key
        self.fail_remaining = fail_first
        self.fail_status = fail_status
        self.delay_s = delay_s
        self.strip_marker = strip_marker or (lambda user: False)
        self.judge_reply = judge_reply
        self.default_reply = default_reply
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_seen = 0
        self.chat_requests: list[bytes] = []
        self.status_log: list[int] = []
        self._server = None
        self._thread = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockEndpoint":
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def start(self, host: str = "127.0.0.1", port: int = 0) -> None:
        self._server = ThreadingHTTPServer((host, port), _handler(self))
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    # -- replies ---------------------------------------------------------------

    def authorized(self, header: str | None) -> bool:
        return self.api_key is None or header == f"Bearer {self.api_key}"

    def take_failure(self) -> bool:
        with self.lock:
            if self.fail_remaining > 0:
                self.fail_remaining -= 1
                return True
            return False

    def chat_reply(self, body: dict) -> str:
        msgs = {m["role"]: m["content"] for m in body.get("messages", [])}
        system, user = msgs.get("system", ""), msgs.get("user", "")
        if system == canonical_rubric():
            if self.judge_reply is not None:
                return self.judge_reply
            m = _JUDGE.match(user)
            if m is None:
                return "I cannot find the answer and output."
            score = literal_judge(m["answer"], m["output"])
            return f"score: {score:g}\nApplied the rubric to the listed information."
        if user in self.echo:
            truth = self.echo[user]
            return truth if self.strip_marker(user) else "[Final Answer]:\n" + truth
        return self.default_reply


def _handler(ep: MockEndpoint):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _send(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            with ep.lock:
                ep.status_log.append(status)

        def do_GET(self):
            if not ep.authorized(self.headers.get("Authorization")):
                return self._send(401, {"error": "invalid api key"})
            if self.path.rstrip("/").endswith("/models"):
                return self._send(200, {"data": [{"id": "mock"}]})
            self._send(404, {"error": "not found"})

        def do_POST(self):
            body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
            if not ep.authorized(self.headers.get("Authorization")):
                return self._send(401, {"error": "invalid api key"})
            with ep.lock:
                ep.in_flight += 1
                ep.max_seen = max(ep.max_seen, ep.in_flight)
            try:
                if ep.delay_s:
                    time.sleep(ep.delay_s)
                if ep.take_failure():
                    return self._send(ep.fail_status, {"error": "injected failure"})
                req = json.loads(body)
                if self.path.endswith("/chat/completions"):
                    with ep.lock:
                        ep.chat_requests.append(body)
                    text = ep.chat_reply(req)
                    return self._send(200, {"choices": [{"index": 0, "message": {"role": "assistant",
                                                                                  "content": text}}]})
                if self.path.endswith("/embeddings"):
                    emb = HashingEmbedder()
                    rows = [{"index": i, "embedding": emb(t)} for i, t in enumerate(req["input"])]
                    return self._send(200, {"data": rows})
                self._send(404, {"error": "not found"})
            finally:
                with ep.lock:
                    ep.in_flight -= 1

    return Handler


__all__ = ["MockEndpoint", "echo_table", "literal_judge"]
