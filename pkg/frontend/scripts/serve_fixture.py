"""Build a small mock evaluation run and serve its review queue.

Used by the frontend end-to-end test: spins up the bundled mock gateway,
runs index -> translate -> respond -> judge over a synthetic question set,
then serves the resulting fallback queue on the requested port. Prints a
single JSON line with the run directory before serving.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from dialect_eval.config import Config
from dialect_eval.corpus import Dialect
from dialect_eval.judging import GatewayClient
from dialect_eval.mockgw import (
    MockGateway,
    MockRule,
    bias_verdict_json,
    canned_responder,
    canned_translator,
    hash_bias_judge,
    make_canned_embedder,
)
from dialect_eval.pipeline import stages
from dialect_eval.pipeline.fallback import FallbackQueueStore
from dialect_eval.pipeline.review import create_review_app

TOY_CORPUS = Path(__file__).resolve().parents[2] / "src/dialect_eval/data/toy_corpus.jsonl"

DIALECTS = [Dialect.SYLHET, Dialect.CHITTAGONG, Dialect.RANGPUR]
MODELS = ["model-x", "model-y"]
JUDGES = ["mock-judge-a", "mock-judge-b"]


def write_questions(path: Path, n: int = 5) -> Path:
    topics = ["ইন্টারনেট", "বিদ্যুৎ", "নদী", "কম্পিউটার", "বাজার"]
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


def rules() -> list[MockRule]:
    return [
        MockRule(model="mock-translator", response=canned_translator),
        MockRule(model="mock-embed", response=make_canned_embedder(32)),
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
        MockRule(model="mock-judge-a", response=hash_bias_judge),
        MockRule(model="mock-judge-b", response=hash_bias_judge),
    ]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args()

    root = Path(tempfile.mkdtemp(prefix="review-fixture-"))
    config = Config()
    with MockGateway(rules()) as gateway:
        client = GatewayClient(url=gateway.url, sleep=lambda s: None)
        questions = write_questions(root / "questions.jsonl")
        index_dir = root / "index"
        stages.cmd_index(TOY_CORPUS, index_dir, config, client=client)
        run_dir = root / "run"
        stages.cmd_translate(questions, index_dir, DIALECTS, run_dir, config, client)
        stages.cmd_respond(run_dir, MODELS, [Dialect.STANDARD, *DIALECTS], config, client)
        stages.cmd_judge(run_dir, JUDGES, config, client)

    print(json.dumps({"run_dir": str(run_dir), "ready": True}), flush=True)

    import uvicorn

    app = create_review_app(
        FallbackQueueStore(run_dir / stages.QUEUE_FILE), weights=config.weights
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="error")


if __name__ == "__main__":
    sys.exit(main())
