"""Pipeline stages: index, translate, respond, judge, agree.

Every stage appends to its own run log and skips keys that already
succeeded, so any stage can be killed and resumed without duplicating
work. Gateway failures for single items become sentinel rows; they never
abort the run and are retried on the next pass.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template
from typing import Callable

import numpy as np

from ..agreement import AgreementReport, CbsParams, ScoreSeries, agreement_report
from ..config import Config
from ..corpus import (
    Dialect,
    QuestionSet,
    SentencePair,
    dump_questions,
    load_pairs,
    load_questions,
    normalize_text,
    tag_query,
)
from ..embeddings import CachedEmbedding, GatewayEmbedding, SyntheticEmbedding
from ..judging import (
    GatewayClient,
    GatewayRequest,
    JudgingError,
    build_bias_judge_prompt,
    looks_like_refusal,
    parse_bias_verdict,
)
from ..retrieval import (
    DenseIndex,
    HybridRetriever,
    SparseIndex,
    build_fewshot_prompt,
    build_indexes,
)
from .fallback import FallbackQueueStore
from .runlog import STATUS_FAILED, STATUS_OK, RunLog, completed_keys, effective_rows, load_rows

logger = logging.getLogger(__name__)

TRANSLATE_LOG = "translate.jsonl"
RESPOND_LOG = "respond.jsonl"
JUDGE_LOG = "judge.jsonl"
QUESTIONS_FILE = "questions.jsonl"
QUEUE_FILE = "fallback_queue.jsonl"


class StageError(Exception):
    pass


def make_embedding_provider(config: Config, cache_dir: str | Path, client: GatewayClient | None = None) -> CachedEmbedding:
    if config.embeddings.provider == "synthetic":
        inner = SyntheticEmbedding(dim=config.embeddings.dim)
    else:
        if client is None:
            raise StageError("gateway embedding provider requires a gateway client")
        inner = GatewayEmbedding(
            client,
            model_name=config.embeddings.model,
            dim=config.embeddings.dim,
            batch_size=config.embeddings.batch_size,
        )
    return CachedEmbedding(inner, cache_dir, namespace=config.embeddings.model)


def _write_config_snapshot(run_dir: Path, config: Config) -> None:
    path = run_dir / "config_snapshot.json"
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {"config_hash": config.config_hash, "weights": config.weights.as_dict()}
    path.write_text(json.dumps(snapshot, sort_keys=True) + "\n", "utf-8")


def _run_tasks(tasks: list[Callable[[], None]], parallelism: int) -> None:
    """Run item tasks with bounded parallelism; log appends stay serialized
    inside RunLog. Each task handles its own per-item failures."""
    if parallelism <= 1 or len(tasks) <= 1:
        for task in tasks:
            task()
        return
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for future in [pool.submit(task) for task in tasks]:
            future.result()


# ---------------------------------------------------------------------------
# index


@dataclass
class IndexBundle:
    pairs: list[SentencePair]
    dense: DenseIndex
    sparse: SparseIndex
    manifest: dict


def cmd_index(
    pairs_path: str | Path,
    index_dir: str | Path,
    config: Config,
    client: GatewayClient | None = None,
) -> dict:
    """Build and persist the dense+sparse indexes plus a manifest."""
    pairs_path = Path(pairs_path)
    index_dir = Path(index_dir)
    index_dir.mkdir(parents=True, exist_ok=True)
    pairs = load_pairs(pairs_path)
    provider = make_embedding_provider(config, index_dir / "cache", client)
    texts = [pair.standard for pair in pairs]
    vectors = provider.embed(texts)
    embeddings = {pair.id: vec for pair, vec in zip(pairs, vectors)}
    dense, sparse = build_indexes(pairs, embeddings, k1=config.retrieval.k1, b=config.retrieval.b)

    np.savez(
        index_dir / "dense.npz",
        ids=np.array(dense.ids),
        vectors=dense.vectors,
    )
    sparse_record = {
        "k1": sparse.k1,
        "b": sparse.b,
        "postings": sparse.postings,
        "doc_lengths": sparse.doc_lengths,
        "avgdl": sparse.avgdl,
    }
    (index_dir / "sparse.json").write_text(
        json.dumps(sparse_record, ensure_ascii=False, sort_keys=True), "utf-8"
    )
    with (index_dir / "pairs.jsonl").open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_record(), ensure_ascii=False) + "\n")

    manifest = {
        "corpus_hash": hashlib.sha256(pairs_path.read_bytes()).hexdigest()[:16],
        "entries": [pair.id for pair in pairs],
        "n_pairs": len(pairs),
        "dim": provider.dim,
        "embedding_provider": config.embeddings.provider,
        "embedding_model": config.embeddings.model,
        "config_hash": config.config_hash,
    }
    (index_dir / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n", "utf-8"
    )
    return manifest


def load_index(index_dir: str | Path) -> IndexBundle:
    index_dir = Path(index_dir)
    manifest = json.loads((index_dir / "manifest.json").read_text("utf-8"))
    data = np.load(index_dir / "dense.npz", allow_pickle=False)
    dense = DenseIndex([str(x) for x in data["ids"]], data["vectors"])
    sparse_record = json.loads((index_dir / "sparse.json").read_text("utf-8"))
    sparse = SparseIndex(k1=sparse_record["k1"], b=sparse_record["b"])
    sparse.postings = {
        term: {doc: int(tf) for doc, tf in docs.items()}
        for term, docs in sparse_record["postings"].items()
    }
    sparse.doc_lengths = {doc: int(n) for doc, n in sparse_record["doc_lengths"].items()}
    sparse.avgdl = float(sparse_record["avgdl"])
    pairs = load_pairs(index_dir / "pairs.jsonl")
    return IndexBundle(pairs=pairs, dense=dense, sparse=sparse, manifest=manifest)


# ---------------------------------------------------------------------------
# translate


def cmd_translate(
    questions_path: str | Path,
    index_dir: str | Path,
    dialects: list[Dialect],
    run_dir: str | Path,
    config: Config,
    client: GatewayClient,
    run_id: str = "run",
) -> Path:
    """Translate each standard question into each requested dialect.

    Emits the dialectal question file consumed by cmd_respond; failed
    translations become sentinel rows and leave that variant out.
    """
    run_dir = Path(run_dir)
    _write_config_snapshot(run_dir, config)
    questions = load_questions(questions_path)
    bundle = load_index(index_dir)
    retriever = HybridRetriever(
        bundle.pairs,
        bundle.dense,
        bundle.sparse,
        standard_profile=config.retrieval.standard_profile,
        short_profile=config.retrieval.short_profile,
    )
    provider = make_embedding_provider(config, Path(index_dir) / "cache", client)
    log = RunLog(run_dir / TRANSLATE_LOG, run_id, "translate", config.config_hash)
    done = completed_keys(load_rows(log.path))

    todo: list[tuple] = []
    for question in questions:
        for dialect in dialects:
            if dialect is Dialect.STANDARD:
                continue
            key = {"question_id": question.id, "dialect": dialect.label}
            if json.dumps(key, sort_keys=True, ensure_ascii=False) not in done:
                todo.append((question, dialect, key))

    # one batched embedding pass for the query texts, then parallel calls
    pending_texts = sorted({question.standard_q for question, _, _ in todo})
    vectors = dict(zip(pending_texts, provider.embed(pending_texts))) if pending_texts else {}

    def translate_one(question, dialect: Dialect, key: dict) -> None:
        try:
            query = tag_query(question.standard_q)
            candidates = retriever.retrieve(
                query, vectors[question.standard_q], dialect, k=config.retrieval.fewshot_k
            )
            prompt = build_fewshot_prompt(candidates, query, dialect, retriever.pairs_by_id)
            raw = client.call(
                GatewayRequest(
                    model_name=config.translator_model,
                    prompt=prompt,
                    response_format_hint="text",
                    max_attempts=config.judges.max_attempts,
                    timeout=config.judges.timeout,
                )
            )
            translation = normalize_text(raw)
            if not translation:
                raise JudgingError("translator returned empty text")
            log.append(
                key,
                {"translation": translation, "examples": [c.pair_id for c in candidates]},
            )
        except JudgingError as exc:
            logger.warning("translate %s/%s failed: %s", question.id, dialect.label, exc)
            log.append(key, {}, status=STATUS_FAILED, error=str(exc))

    _run_tasks(
        [lambda q=q, d=d, k=k: translate_one(q, d, k) for q, d, k in todo],
        config.parallelism,
    )

    out_path = run_dir / QUESTIONS_FILE
    _write_question_file(questions, load_rows(log.path), out_path)
    return out_path


def _write_question_file(questions: list[QuestionSet], rows: list[dict], out_path: Path) -> None:
    translations: dict[tuple[str, str], str] = {}
    for row in effective_rows(rows).values():
        if row["status"] == STATUS_OK:
            key = row["key"]
            translations[(key["question_id"], key["dialect"])] = row["payload"]["translation"]
    out_questions = []
    for question in questions:
        variants = dict(question.variants)
        for (qid, dialect_label), text in translations.items():
            if qid == question.id:
                variants[Dialect.parse(dialect_label)] = text
        out_questions.append(
            QuestionSet(
                id=question.id,
                qtype=question.qtype,
                domain=question.domain,
                standard_q=question.standard_q,
                variants=variants,
            )
        )
    dump_questions(out_questions, out_path)


# ---------------------------------------------------------------------------
# respond


def _answer_template(dialect: Dialect) -> Template:
    root = (
        resources.files("dialect_eval").joinpath("data").joinpath("templates").joinpath("answer")
    )
    candidate = root.joinpath(f"{dialect.label}.txt")
    if candidate.is_file():
        return Template(candidate.read_text("utf-8"))
    return Template(root.joinpath("default.txt").read_text("utf-8"))


def build_answer_prompt(question_text: str, dialect: Dialect) -> str:
    """Wrap a question in the per-dialect answer instruction template."""
    return _answer_template(dialect).substitute(question=question_text)


def cmd_respond(
    run_dir: str | Path,
    models: list[str],
    dialects: list[Dialect],
    config: Config,
    client: GatewayClient,
    questions_path: str | Path | None = None,
    run_id: str = "run",
) -> Path:
    """Collect one model response per (question, dialect, model)."""
    run_dir = Path(run_dir)
    _write_config_snapshot(run_dir, config)
    questions = load_questions(questions_path or run_dir / QUESTIONS_FILE)
    log = RunLog(run_dir / RESPOND_LOG, run_id, "respond", config.config_hash)
    done = completed_keys(load_rows(log.path))

    def respond_one(question, dialect: Dialect, model: str, key: dict) -> None:
        if dialect is not Dialect.STANDARD and dialect not in question.variants:
            log.append(key, {}, status=STATUS_FAILED, error="missing dialect variant")
            return
        prompt = build_answer_prompt(question.text_for(dialect), dialect)
        try:
            response = client.call(
                GatewayRequest(
                    model_name=model,
                    prompt=prompt,
                    response_format_hint="text",
                    max_attempts=config.judges.max_attempts,
                    timeout=config.judges.timeout,
                )
            )
            log.append(
                key,
                {"response": response, "refusal_flag": looks_like_refusal(response)},
            )
        except JudgingError as exc:
            logger.warning("respond %s/%s/%s failed: %s", question.id, dialect.label, model, exc)
            log.append(key, {}, status=STATUS_FAILED, error=str(exc))

    tasks = []
    for question in questions:
        for dialect in dialects:
            for model in models:
                key = {
                    "question_id": question.id,
                    "dialect": dialect.label,
                    "model": model,
                }
                if json.dumps(key, sort_keys=True, ensure_ascii=False) in done:
                    continue
                tasks.append(
                    lambda q=question, d=dialect, m=model, k=key: respond_one(q, d, m, k)
                )
    _run_tasks(tasks, config.parallelism)
    return log.path


# ---------------------------------------------------------------------------
# judge


def verdict_ref_for(run_id: str, question_id: str, dialect: str, model: str, judge: str) -> str:
    blob = "|".join((run_id, question_id, dialect, model, judge))
    return hashlib.sha1(blob.encode("utf-8")).hexdigest()[:16]


def cmd_judge(
    run_dir: str | Path,
    judges: list[str],
    config: Config,
    client: GatewayClient,
    run_id: str = "run",
    stop_after_rows: int | None = None,
) -> Path:
    """Score every (question, dialect, model) response pair with each judge.

    Primary-judge verdicts with confidence <= 3 are queued for human
    fallback. ``stop_after_rows`` aborts after N appended rows; it exists
    to exercise kill-and-resume in tests.
    """
    run_dir = Path(run_dir)
    _write_config_snapshot(run_dir, config)
    questions = {q.id: q for q in load_questions(run_dir / QUESTIONS_FILE)}
    respond_rows = effective_rows(load_rows(run_dir / RESPOND_LOG))
    responses: dict[tuple[str, str, str], dict] = {}
    for row in respond_rows.values():
        key = row["key"]
        responses[(key["question_id"], key["dialect"], key["model"])] = row

    log = RunLog(run_dir / JUDGE_LOG, run_id, "judge", config.config_hash)
    done = completed_keys(load_rows(log.path))

    items = sorted(
        {
            (qid, dialect, model)
            for (qid, dialect, model) in responses
            if dialect != Dialect.STANDARD.label
        }
    )

    def judge_one(qid: str, dialect_label: str, model: str, judge: str, key: dict) -> None:
        dialect = Dialect.parse(dialect_label)
        question = questions.get(qid)
        dia_row = responses.get((qid, dialect_label, model))
        std_row = responses.get((qid, Dialect.STANDARD.label, model))
        ref = verdict_ref_for(run_id, qid, dialect_label, model, judge)
        error = ""
        if question is None:
            error = "question not found"
        elif dialect not in question.variants:
            error = "missing dialect variant"
        elif dia_row is None or dia_row["status"] != STATUS_OK:
            error = "missing dialectal response"
        elif std_row is None or std_row["status"] != STATUS_OK:
            error = "missing standard response"
        if error:
            log.append(key, {"verdict_ref": ref}, status=STATUS_FAILED, error=error)
            return
        try:
            prompt = build_bias_judge_prompt(
                question.standard_q,
                question.variants[dialect],
                std_row["payload"]["response"],
                dia_row["payload"]["response"],
                dialect,
                statements=config.statements,
                weights=config.weights,
            )
            raw = client.call(
                GatewayRequest(
                    model_name=judge,
                    prompt=prompt,
                    response_format_hint="json",
                    max_attempts=config.judges.max_attempts,
                    timeout=config.judges.timeout,
                )
            )
            verdict = parse_bias_verdict(raw, config.weights)
            log.append(
                key,
                {
                    "verdict_ref": ref,
                    "reasoning": verdict.reasoning,
                    "likert": list(verdict.likert),
                    "script_valid": verdict.script_valid,
                    "confidence": verdict.confidence,
                    "final_score": verdict.final_score,
                    "refusal_flag": bool(dia_row["payload"].get("refusal_flag")),
                },
            )
        except JudgingError as exc:
            logger.warning("judge %s/%s/%s/%s failed: %s", qid, dialect_label, model, judge, exc)
            log.append(key, {"verdict_ref": ref}, status=STATUS_FAILED, error=str(exc))

    todo = []
    for qid, dialect_label, model in items:
        for judge in judges:
            key = {
                "question_id": qid,
                "dialect": dialect_label,
                "model": model,
                "judge": judge,
            }
            if json.dumps(key, sort_keys=True, ensure_ascii=False) in done:
                continue
            todo.append((qid, dialect_label, model, judge, key))

    if stop_after_rows is not None:
        # kill simulation runs serially so the cut point is well-defined
        for args in todo[:stop_after_rows]:
            judge_one(*args)
        logger.warning("stopping after %d rows (requested)", min(stop_after_rows, len(todo)))
    else:
        _run_tasks([lambda a=args: judge_one(*a) for args in todo], config.parallelism)

    rebuild_fallback_queue(run_dir, config, run_id=run_id)
    return log.path


def rebuild_fallback_queue(run_dir: str | Path, config: Config, run_id: str = "run") -> FallbackQueueStore:
    """Queue = exactly the primary-judge rows with confidence <= 3.

    Existing resolutions are preserved; items that no longer qualify are
    dropped.
    """
    run_dir = Path(run_dir)
    questions = {q.id: q for q in load_questions(run_dir / QUESTIONS_FILE)}
    respond_rows = effective_rows(load_rows(run_dir / RESPOND_LOG))
    responses = {
        (row["key"]["question_id"], row["key"]["dialect"], row["key"]["model"]): row
        for row in respond_rows.values()
        if row["status"] == STATUS_OK
    }
    judge_rows = effective_rows(load_rows(run_dir / JUDGE_LOG))

    items: list[dict] = []
    for row in judge_rows.values():
        key = row["key"]
        if key["judge"] != config.judges.primary or row["status"] != STATUS_OK:
            continue
        payload = row["payload"]
        if payload["confidence"] > 3:
            continue
        question = questions.get(key["question_id"])
        std_row = responses.get((key["question_id"], Dialect.STANDARD.label, key["model"]))
        dia_row = responses.get((key["question_id"], key["dialect"], key["model"]))
        items.append(
            {
                "verdict_ref": payload["verdict_ref"],
                "question_id": key["question_id"],
                "dialect": key["dialect"],
                "model_name": key["model"],
                "judge": key["judge"],
                "payload": {
                    "standard_question": question.standard_q if question else "",
                    "dialect_question": (
                        question.variants.get(Dialect.parse(key["dialect"]), "")
                        if question
                        else ""
                    ),
                    "standard_response": std_row["payload"]["response"] if std_row else "",
                    "dialect_response": dia_row["payload"]["response"] if dia_row else "",
                    "machine": {
                        "reasoning": payload["reasoning"],
                        "likert": payload["likert"],
                        "script_valid": payload["script_valid"],
                        "confidence": payload["confidence"],
                        "final_score": payload["final_score"],
                    },
                },
                "status": "pending",
                "human_override": None,
                "audit": {"run_id": run_id, "config_hash": row["config_hash"]},
            }
        )
    store = FallbackQueueStore(run_dir / QUEUE_FILE)
    store.rebuild_from(items)
    return store


# ---------------------------------------------------------------------------
# agree


def cmd_agree(
    run_dir: str | Path,
    config: Config,
) -> dict[str, AgreementReport]:
    """Agreement statistics: primary judge vs each secondary judge."""
    run_dir = Path(run_dir)
    judge_rows = effective_rows(load_rows(run_dir / JUDGE_LOG)).values()
    primary = config.judges.primary
    scores: dict[str, dict[tuple[str, str, str], float]] = {}
    for row in judge_rows:
        if row["status"] != STATUS_OK:
            continue
        key = row["key"]
        scores.setdefault(key["judge"], {})[
            (key["question_id"], key["dialect"], key["model"])
        ] = float(row["payload"]["final_score"])

    if primary not in scores:
        raise StageError(f"no verdicts from primary judge {primary!r}")
    params = CbsParams(threshold=config.cbs_threshold, scale_max=config.weights.scale_max)
    reports: dict[str, AgreementReport] = {}
    for judge, judge_scores in sorted(scores.items()):
        if judge == primary:
            continue
        shared = sorted(set(scores[primary]) & set(judge_scores))
        if len(shared) < 2:
            logger.warning("skipping %s vs %s: fewer than 2 shared items", primary, judge)
            continue
        series = ScoreSeries(
            ids=tuple("|".join(item) for item in shared),
            a=tuple(scores[primary][item] for item in shared),
            b=tuple(judge_scores[item] for item in shared),
            scale_max=config.weights.scale_max,
        )
        reports[f"{primary} vs {judge}"] = agreement_report(series, params)
    return reports
