"""Bundled mock model gateway for tests and offline end-to-end runs.

Serves the same HTTP contract as a real gateway: POST {model, messages,
temperature} -> {"text": ...}. Behavior is rule-driven: the first rule
whose model and prompt-substring match wins. Rules can inject transient
failures (N 500s before succeeding) or fail permanently, which is how the
acceptance suite exercises retries, sentinel rows, and resume.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from .embeddings import SyntheticEmbedding


@dataclass
class MockRule:
    """One canned behavior: matched by model name and prompt substring."""

    model: str = "*"
    match: str = ""
    response: str | Callable[[str, str], str] = ""
    fail_times: int = 0
    permanent_fail: bool = False
    _failed: int = field(default=0, repr=False)

    def matches(self, model: str, prompt: str) -> bool:
        if self.model != "*" and self.model != model:
            return False
        return self.match in prompt

    def render(self, model: str, prompt: str) -> str:
        if callable(self.response):
            return self.response(model, prompt)
        return self.response


_STANDARD_LINE_RE = re.compile(r"^Standard:\s*(.+)$", re.MULTILINE)
_DIALECT_HEADER_RE = re.compile(r"\(([^)]+)\)\]")


def canned_translator(model: str, prompt: str) -> str:
    """Deterministic fake translation: echo the query with a dialect mark."""
    matches = _STANDARD_LINE_RE.findall(prompt)
    query = matches[-1].strip() if matches else prompt.strip()[:40]
    return f"{query} [দ্বান্দ্বিক]"


_QUESTION_LINE_RE = re.compile(r"^প্রশ্ন:\s*(.+)$", re.MULTILINE)


def canned_responder(model: str, prompt: str) -> str:
    """Deterministic fake answer: echo the question with a model mark."""
    matches = _QUESTION_LINE_RE.findall(prompt)
    question = matches[-1].strip() if matches else prompt.strip()[:40]
    return f"{question} এর উত্তর হলো একটি নির্দিষ্ট ব্যাখ্যা ({model})।"


def make_canned_embedder(dim: int = 32) -> Callable[[str, str], str]:
    provider = SyntheticEmbedding(dim=dim)

    def respond(model: str, prompt: str) -> str:
        texts = json.loads(prompt)
        return json.dumps(provider.embed(texts))

    return respond


def bias_verdict_json(
    likert: tuple[int, int, int, int, int] = (4, 4, 4, 4, 4),
    script_valid: bool = True,
    confidence: int = 5,
    reasoning: str = "Canned deterministic comparison of the two responses.",
) -> str:
    return json.dumps(
        {
            "chain_of_thought_reasoning": reasoning,
            "script_valid": script_valid,
            "likert_comprehension": likert[0],
            "likert_factual": likert[1],
            "likert_completeness": likert[2],
            "likert_clarity": likert[3],
            "likert_length": likert[4],
            "confidence": confidence,
        }
    )


def translation_verdict_json(
    score: int = 9,
    inaccurate_words: str = "",
    meaning: str = "yes",
    exemptions: str = "spacing variants",
) -> str:
    return json.dumps(
        {
            "chain_of_thought_reasoning": "Canned fidelity reasoning: compared reference and machine output.",
            "exempt_differences_found": exemptions,
            "inaccurate_words": inaccurate_words,
            "meaning_preserved": meaning,
            "score_integer": score,
            "score_rationale": "canned rationale",
        }
    )


def hash_bias_judge(model: str, prompt: str) -> str:
    """Deterministic pseudo-verdict derived from the prompt content."""
    import hashlib

    digest = hashlib.sha256(f"{model}\x1f{prompt}".encode("utf-8")).digest()
    likert = tuple(2 + digest[i] % 4 for i in range(5))  # values in 2..5
    confidence = 4 + digest[5] % 2  # 4..5: high confidence, no fallback
    return bias_verdict_json(likert=likert, confidence=confidence)  # type: ignore[arg-type]


class MockGateway:
    """Threaded HTTP server with rule-driven canned responses."""

    def __init__(self, rules: list[MockRule] | None = None, host: str = "127.0.0.1") -> None:
        self.rules = rules or []
        self.host = host
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._lock = threading.Lock()
        self.request_count = 0
        self.requests: list[dict] = []

    # -- server lifecycle ---------------------------------------------------

    def start(self) -> str:
        gateway = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"  # keep-alive; clients reuse connections

            def log_message(self, *args) -> None:  # silence default stderr noise
                pass

            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
                status, payload = gateway.handle(body)
                data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self._server = ThreadingHTTPServer((self.host, 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.url

    @property
    def url(self) -> str:
        assert self._server is not None, "gateway not started"
        return f"http://{self.host}:{self._server.server_address[1]}/"

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockGateway":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- request handling ---------------------------------------------------

    def handle(self, body: dict) -> tuple[int, dict]:
        model = str(body.get("model", ""))
        messages = body.get("messages", [])
        prompt = str(messages[-1]["content"]) if messages else ""
        with self._lock:
            self.request_count += 1
            self.requests.append({"model": model, "prompt": prompt})
            for rule in self.rules:
                if not rule.matches(model, prompt):
                    continue
                if rule.permanent_fail:
                    return 500, {"error": "injected permanent failure"}
                if rule._failed < rule.fail_times:
                    rule._failed += 1
                    return 500, {"error": "injected transient failure"}
                return 200, {"text": rule.render(model, prompt)}
        return 404, {"error": f"no mock rule for model {model!r}"}


def default_rules(embed_model: str = "mock-embed", dim: int = 32) -> list[MockRule]:
    """Happy-path rule set: translator, embedder, two agreeing judges."""
    return [
        MockRule(model="mock-translator", response=canned_translator),
        MockRule(model=embed_model, response=make_canned_embedder(dim)),
        MockRule(model="mock-judge-a", response=hash_bias_judge),
        MockRule(model="mock-judge-b", response=hash_bias_judge),
    ]
