"""BridgeClient protocol behavior against an in-process stub server."""

import json
import socket
import socketserver
import threading

import pytest

from pias.bridge import MAX_BATCH, BridgeClient
from pias.errors import BridgeError


class _StubHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except json.JSONDecodeError:
                self._send({"id": -1, "error": "malformed JSON"})
                continue
            self._send(self.server.respond(request))

    def _send(self, payload):
        self.wfile.write((json.dumps(payload) + "\n").encode("utf-8"))
        self.wfile.flush()


class StubBridge(socketserver.ThreadingTCPServer):
    """Echo-model stub: deterministic scores, first-max_words summaries."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self):
        super().__init__(("127.0.0.1", 0), _StubHandler)
        self.seen_batches = []
        self.override = None  # callable(request) -> response, for fault tests

    def respond(self, request):
        if self.override:
            return self.override(request)
        rid = request.get("id")
        task = request.get("task")
        texts = request.get("texts") or []
        if task != "health" and len(texts) > MAX_BATCH:
            return {"id": rid, "error": f"batch of {len(texts)} exceeds {MAX_BATCH}"}
        self.seen_batches.append(len(texts))
        if task == "health":
            return {"id": rid, "status": "ok"}
        if task in ("score_evidence", "classify"):
            return {"id": rid, "scores": [(len(t) % 101) / 100 for t in texts]}
        if task == "summarize":
            words = texts[0].split()[: request.get("max_words", 140)]
            return {"id": rid, "summary": " ".join(words)}
        if task == "count_tokens":
            return {"id": rid, "token_counts": [len(t.split()) for t in texts]}
        return {"id": rid, "error": f"unknown task {task!r}"}


@pytest.fixture()
def stub():
    server = StubBridge()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()


def _client(server):
    host, port = server.server_address
    return BridgeClient(f"{host}:{port}", timeout=5)


def test_health_round_trip(stub):
    client = _client(stub)
    assert client.health() == "ok"
    client.close()


def test_scores_and_summary_and_counts(stub):
    client = _client(stub)
    scores = client.score_evidence(["abc", "defghi"])
    assert scores == [(3 % 101) / 100, (6 % 101) / 100]
    assert client.classify_batch(["xyz"]) == [(3 % 101) / 100]
    assert client.summarize("one two three four", 2) == "one two"
    assert client.count_tokens_batch(["a b c", ""]) == [3, 0]
    assert client.count_tokens("a b") == 2
    client.close()


def test_generator_interface_matches_echo(stub):
    from pias.summarize import EchoGenerator

    client = _client(stub)
    echo = EchoGenerator()
    text = "alpha beta gamma delta epsilon"
    assert client.generate(text, 3) == echo.generate(text, 3)
    assert client.count_tokens(text) == echo.count_tokens(text)
    client.close()


def test_client_splits_large_batches(stub):
    client = _client(stub)
    texts = [f"text {i}" for i in range(150)]
    scores = client.score_evidence(texts)
    assert len(scores) == 150
    assert max(stub.seen_batches) <= MAX_BATCH
    client.close()


def test_client_rejects_out_of_range_scores(stub):
    stub.override = lambda req: {"id": req["id"], "scores": [1.5] * len(req["texts"])}
    client = _client(stub)
    with pytest.raises(BridgeError):
        client.score_evidence(["a"])
    client.close()


def test_client_rejects_mismatched_id(stub):
    stub.override = lambda req: {"id": req["id"] + 7, "scores": [0.5] * len(req.get("texts", []))}
    client = _client(stub)
    with pytest.raises(BridgeError):
        client.score_evidence(["a"])
    client.close()


def test_client_surfaces_server_errors(stub):
    stub.override = lambda req: {"id": req["id"], "error": "model exploded"}
    client = _client(stub)
    with pytest.raises(BridgeError, match="model exploded"):
        client.score_evidence(["a"])
    client.close()


def test_client_rejects_wrong_length_batches(stub):
    stub.override = lambda req: {"id": req["id"], "scores": [0.5]}
    client = _client(stub)
    with pytest.raises(BridgeError):
        client.score_evidence(["a", "b", "c"])
    client.close()


def test_client_unreachable_bridge():
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        free_port = probe.getsockname()[1]
    client = BridgeClient(f"127.0.0.1:{free_port}", timeout=0.5)
    with pytest.raises(BridgeError):
        client.health()


def test_client_fit_is_unsupported(stub):
    client = _client(stub)
    with pytest.raises(BridgeError):
        client.fit([("text", 1)])
    client.close()


def test_bad_url_rejected():
    with pytest.raises(BridgeError):
        BridgeClient("nonsense")


def test_summary_budget_enforced(stub):
    stub.override = lambda req: {"id": req["id"], "summary": "way too many words returned here"}
    client = _client(stub)
    with pytest.raises(BridgeError):
        client.summarize("text", 2)
    client.close()
