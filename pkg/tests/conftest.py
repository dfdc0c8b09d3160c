from __future__ import annotations

import json
from pathlib import Path

import pytest

from dialect_eval.config import Config
from dialect_eval.judging import GatewayClient
from dialect_eval.mockgw import (
    MockGateway,
    MockRule,
    bias_verdict_json,
    canned_responder,
    canned_translator,
    make_canned_embedder,
    hash_bias_judge,
)

TOY_CORPUS = Path(__file__).resolve().parents[1] / "src/dialect_eval/data/toy_corpus.jsonl"


def write_questions(path: Path, n: int = 5) -> Path:
    """Synthetic standard-Bengali question file with per-question markers."""
    topics = ["ইন্টারনেট", "বিদ্যুৎ", "নদী", "কম্পিউটার", "বাজার", "বৃষ্টি", "গ্রাম"]
    rows = []
    for i in range(n):
        rows.append(
            {
                "id": f"q{i:03d}",
                "qtype": ["Definitional", "Contrasting", "FactualIdentification", "Functional"][i % 4],
                "domain": ["Technology", "SocialSciences", "HealthSports"][i % 3],
                "standard_q": f"{topics[i % len(topics)]} marker{i:03d} কাকে বলে?",
                "variants": {},
            }
        )
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n", "utf-8")
    return path


def make_e2e_rules(dim: int = 32) -> list[MockRule]:
    """Mock behavior for the end-to-end run.

    - marker001 + judge-a: low confidence (2) -> human fallback
    - marker002 + judge-a: invalid script -> zeroed + fallback
    - marker003 + judge-b: permanently malformed JSON -> sentinel row
    - everything else: deterministic hash-derived high-confidence verdicts
    """
    return [
        MockRule(model="mock-translator", response=canned_translator),
        MockRule(model="mock-embed", response=make_canned_embedder(dim)),
        MockRule(model="model-x", response=canned_responder),
        MockRule(model="model-y", response=canned_responder),
        MockRule(
            model="mock-judge-a",
            match="marker001",
            response=bias_verdict_json(likert=(3, 2, 3, 2, 3), confidence=2),
        ),
        MockRule(
            model="mock-judge-a",
            match="marker002",
            response=bias_verdict_json(likert=(4, 4, 4, 4, 4), script_valid=False, confidence=4),
        ),
        MockRule(model="mock-judge-b", match="marker003", response="sorry, no JSON today"),
        MockRule(model="mock-judge-a", response=hash_bias_judge),
        MockRule(model="mock-judge-b", response=hash_bias_judge),
    ]


@pytest.fixture
def mock_gateway():
    with MockGateway(make_e2e_rules()) as gw:
        yield gw


@pytest.fixture
def gw_client(mock_gateway):
    return GatewayClient(url=mock_gateway.url, sleep=lambda s: None)


@pytest.fixture
def config():
    return Config()
