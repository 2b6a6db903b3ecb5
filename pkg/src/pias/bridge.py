"""Client for the model sidecar speaking newline-delimited JSON over TCP.

The sidecar serves evidence scoring, summary classification, abstractive
generation, and token counting behind one line protocol:

    request  {"id": int, "task": "score_evidence" | "classify" | "summarize"
                        | "count_tokens" | "health",
              "texts": [str, ...], "max_words": int?}
    response {"id": int, "scores": [float]?, "summary": str?,
              "token_counts": [int]?, "status": str?, "error": str?}

Exactly one payload field is set on success and the response id echoes the
request id. Requests carry at most 64 texts; this client splits larger
batches. Calls are serialized on one connection.
"""

from __future__ import annotations

import json
import os
import socket
import threading
from collections.abc import Sequence

from .errors import BridgeError

ENV_URL = "PIAS_BRIDGE_URL"
DEFAULT_URL = "127.0.0.1:7851"
MAX_BATCH = 64


def _parse_url(url: str) -> tuple:
    url = url.strip()
    if url.startswith("tcp://"):
        url = url[len("tcp://"):]
    host, _, port = url.rpartition(":")
    if not host or not port.isdigit():
        raise BridgeError(f"bad bridge url {url!r}; expected host:port")
    return host, int(port)


class BridgeClient:
    """Serial line-protocol client; also usable as an evidence scorer
    (score_batch), a text classifier (predict_proba), and a summary
    generator (generate/count_tokens)."""

    concurrency = "serial"

    def __init__(self, url: str | None = None, timeout: float = 60.0):
        self.host, self.port = _parse_url(url or os.environ.get(ENV_URL) or DEFAULT_URL)
        self.timeout = timeout
        self._lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._reader = None
        self._next_id = 0

    def close(self) -> None:
        with self._lock:
            if self._sock is not None:
                try:
                    self._sock.close()
                finally:
                    self._sock = None
                    self._reader = None

    def _connect(self):
        if self._sock is None:
            try:
                self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
            except OSError as exc:
                raise BridgeError(f"cannot reach bridge at {self.host}:{self.port}: {exc}") from exc
            self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")

    def _call(self, task: str, **payload) -> dict:
        with self._lock:
            self._connect()
            self._next_id += 1
            request = {"id": self._next_id, "task": task, **payload}
            try:
                self._sock.sendall((json.dumps(request) + "\n").encode("utf-8"))
                line = self._reader.readline()
            except OSError as exc:
                self.close()
                raise BridgeError(f"bridge connection failed: {exc}") from exc
            if not line:
                self.close()
                raise BridgeError("bridge closed the connection")
            try:
                response = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"bridge sent malformed JSON: {exc.msg}") from exc
            if response.get("error"):
                raise BridgeError(f"bridge error: {response['error']}")
            if response.get("id") != request["id"]:
                raise BridgeError(
                    f"bridge response id {response.get('id')} does not match request {request['id']}"
                )
            return response

    # -- protocol operations ----------------------------------------------

    def health(self) -> str:
        response = self._call("health")
        status = response.get("status")
        if not status:
            raise BridgeError("health response carried no status")
        return status

    def _scores(self, task: str, texts: Sequence[str]) -> list:
        out = []
        for start in range(0, len(texts), MAX_BATCH):
            batch = list(texts[start : start + MAX_BATCH])
            response = self._call(task, texts=batch)
            scores = response.get("scores")
            if scores is None or len(scores) != len(batch):
                raise BridgeError(f"{task} returned {scores!r} for {len(batch)} texts")
            for s in scores:
                if not 0.0 <= s <= 1.0:
                    raise BridgeError(f"{task} score {s} outside [0, 1]")
            out.extend(float(s) for s in scores)
        return out

    def score_evidence(self, texts: Sequence[str]) -> list:
        return self._scores("score_evidence", texts)

    def classify_batch(self, texts: Sequence[str]) -> list:
        return self._scores("classify", texts)

    def summarize(self, text: str, max_words: int) -> str:
        response = self._call("summarize", texts=[text], max_words=max_words)
        summary = response.get("summary")
        if summary is None:
            raise BridgeError("summarize returned no summary")
        if len(summary.split()) > max_words:
            raise BridgeError("bridge summary exceeds max_words")
        return summary

    def count_tokens_batch(self, texts: Sequence[str]) -> list:
        out = []
        for start in range(0, len(texts), MAX_BATCH):
            batch = list(texts[start : start + MAX_BATCH])
            response = self._call("count_tokens", texts=batch)
            counts = response.get("token_counts")
            if counts is None or len(counts) != len(batch):
                raise BridgeError(f"count_tokens returned {counts!r} for {len(batch)} texts")
            out.extend(int(c) for c in counts)
        return out

    # -- pipeline interfaces ------------------------------------------------

    def score_batch(self, texts: Sequence[str]) -> list:
        return self.score_evidence(texts)

    def predict_proba(self, text: str) -> float:
        return self.classify_batch([text])[0]

    def fit(self, pairs, config=None):
        raise BridgeError("the bridge serves inference only; training is out of scope")

    def generate(self, text: str, max_words: int) -> str:
        return self.summarize(text, max_words)

    def count_tokens(self, text: str) -> int:
        return self.count_tokens_batch([text])[0]
