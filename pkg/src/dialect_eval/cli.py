"""Command-line entry points: index, translate, respond, judge, agree,
report, serve."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .agreement import correlation_study
from .config import Config, load_config
from .corpus import Dialect
from .judging import GatewayClient
from .pipeline.aggregate import aggregate_bias_table, merge_human_overrides
from .pipeline.fallback import FallbackQueueStore
from .pipeline.review import serve_review
from .pipeline.runlog import effective_rows, load_rows
from .pipeline import stages
from .textmetrics import MetricKind, bleu, chrf, normalize_metric, wer


def _load_cfg(config_path: str | None) -> Config:
    return load_config(config_path)


def _client(config: Config) -> GatewayClient:
    return GatewayClient(
        url=config.gateway_url or None,
        api_key=config.gateway_key or None,
        temperature=config.judges.temperature,
    )


def _dialect_list(raw: str) -> list[Dialect]:
    return [Dialect.parse(name) for name in raw.split(",") if name.strip()]


def _run_dir(runs_root: str, run_id: str, resume: str | None) -> tuple[Path, str]:
    rid = resume or run_id
    run_dir = Path(runs_root) / rid
    if resume and not run_dir.exists():
        raise click.ClickException(f"cannot resume: {run_dir} does not exist")
    return run_dir, rid


@click.group()
def main() -> None:
    """Dialectal bias evaluation workbench."""


@main.command()
@click.option("--pairs", required=True, type=click.Path(exists=True), help="sentence-pair corpus (NDJSON)")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="index output directory")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def index(pairs: str, out_dir: str, config_path: str | None) -> None:
    """Build dense+sparse retrieval indexes from a sentence-pair corpus."""
    config = _load_cfg(config_path)
    client = _client(config) if config.embeddings.provider == "gateway" else None
    manifest = stages.cmd_index(pairs, out_dir, config, client=client)
    click.echo(f"indexed {manifest['n_pairs']} pairs (dim {manifest['dim']}) into {out_dir}")


@main.command()
@click.option("--questions", required=True, type=click.Path(exists=True))
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--dialects", required=True, help="comma-separated dialect labels")
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--resume", default=None, help="resume an existing run id")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def translate(questions: str, index_dir: str, dialects: str, runs_root: str, run_id: str, resume: str | None, config_path: str | None) -> None:
    """Translate standard questions into dialect variants via few-shot RAG."""
    config = _load_cfg(config_path)
    run_dir, rid = _run_dir(runs_root, run_id, resume)
    out = stages.cmd_translate(
        questions, index_dir, _dialect_list(dialects), run_dir, config, _client(config), run_id=rid
    )
    click.echo(f"wrote dialectal question file {out}")


@main.command()
@click.option("--models", required=True, help="comma-separated model names")
@click.option("--dialects", required=True, help="comma-separated dialect labels (include Standard for baselines)")
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--resume", default=None)
@click.option("--questions", "questions_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def respond(models: str, dialects: str, runs_root: str, run_id: str, resume: str | None, questions_path: str | None, config_path: str | None) -> None:
    """Collect model responses for every (question, dialect, model)."""
    config = _load_cfg(config_path)
    run_dir, rid = _run_dir(runs_root, run_id, resume)
    model_list = [m for m in models.split(",") if m.strip()]
    out = stages.cmd_respond(
        run_dir, model_list, _dialect_list(dialects), config, _client(config),
        questions_path=questions_path, run_id=rid,
    )
    click.echo(f"responses logged to {out}")


@main.command()
@click.option("--judges", default=None, help="comma-separated judge models (default: config primary+secondary)")
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--resume", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def judge(judges: str | None, runs_root: str, run_id: str, resume: str | None, config_path: str | None) -> None:
    """Judge every response pair; queue low-confidence verdicts for humans."""
    config = _load_cfg(config_path)
    run_dir, rid = _run_dir(runs_root, run_id, resume)
    judge_list = [j for j in judges.split(",") if j.strip()] if judges else list(config.judges.all_judges)
    out = stages.cmd_judge(run_dir, judge_list, config, _client(config), run_id=rid)
    store = FallbackQueueStore(run_dir / stages.QUEUE_FILE)
    counts = store.counts()
    click.echo(f"verdicts logged to {out}; fallback queue: {counts['pending']} pending")


@main.command()
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--out", "out_path", type=click.Path(), default=None, help="write the report JSON here")
@click.option("--correlate", "correlate_csv", type=click.Path(exists=True), default=None,
              help="CSV of normalized metric columns plus a human column; runs the correlation study instead")
@click.option("--human-col", default="human", help="human column name for --correlate")
@click.option("--human-scale", default=10.0, type=float, help="divide the human column by this")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def agree(runs_root: str, run_id: str, out_path: str | None, correlate_csv: str | None, human_col: str, human_scale: float, config_path: str | None) -> None:
    """Judge-pair agreement reports, or a metric-vs-human correlation study."""
    from .agreement import format_report_table

    if correlate_csv:
        with open(correlate_csv, encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        if not rows:
            raise click.ClickException("empty correlation CSV")
        if human_col not in rows[0]:
            raise click.ClickException(f"no column {human_col!r} in CSV")
        human = [float(r[human_col]) / human_scale for r in rows]
        columns = {
            name: [float(r[name]) for r in rows]
            for name in rows[0]
            if name != human_col
        }
        table = correlation_study(columns, human)
        records = [row.to_record() for row in table]
        click.echo(f"{'metric':<20}  {'pearson':>8}  {'spearman':>8}  {'ccc':>8}")
        for row in table:
            click.echo(f"{row.metric:<20}  {row.pearson:>8.4f}  {row.spearman:>8.4f}  {row.ccc:>8.4f}")
        if out_path:
            Path(out_path).write_text(json.dumps(records, indent=2) + "\n", "utf-8")
        return

    config = _load_cfg(config_path)
    run_dir, _ = _run_dir(runs_root, run_id, None)
    reports = stages.cmd_agree(run_dir, config)
    click.echo(format_report_table(reports))
    if out_path:
        Path(out_path).write_text(
            json.dumps({name: rep.to_record() for name, rep in reports.items()}, indent=2) + "\n",
            "utf-8",
        )


@main.command()
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--judge", "judge_name", default=None, help="aggregate this judge only (default: config primary)")
@click.option("--no-overrides", is_flag=True, help="ignore resolved human overrides")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--score-pairs", "score_pairs", type=click.Path(exists=True), default=None,
              help="NDJSON of {id, hypothesis, reference}; batch-score lexical metrics instead")
@click.option("--metrics-out", "metrics_out", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def report(runs_root: str, run_id: str, judge_name: str | None, no_overrides: bool, out_path: str | None, score_pairs: str | None, metrics_out: str | None, config_path: str | None) -> None:
    """Bias score table (Likert aggregation), or batch metric scoring."""
    if score_pairs:
        out_lines = []
        with open(score_pairs, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                hyp, ref = record["hypothesis"], record["reference"]
                scores = {
                    "id": record.get("id"),
                    "bleu": bleu(hyp, ref),
                    "chrf": chrf(hyp, ref),
                    "wer": wer(hyp, ref),
                }
                scores["bleu_norm"] = normalize_metric(scores["bleu"], MetricKind.BLEU)
                scores["chrf_norm"] = normalize_metric(scores["chrf"], MetricKind.CHRF)
                scores["wer_norm"] = normalize_metric(scores["wer"], MetricKind.WER)
                out_lines.append(json.dumps(scores, ensure_ascii=False))
        output = "\n".join(out_lines) + "\n"
        if metrics_out:
            Path(metrics_out).write_text(output, "utf-8")
            click.echo(f"wrote {len(out_lines)} metric rows to {metrics_out}")
        else:
            click.echo(output, nl=False)
        return

    config = _load_cfg(config_path)
    run_dir, _ = _run_dir(runs_root, run_id, None)
    rows = list(effective_rows(load_rows(run_dir / stages.JUDGE_LOG)).values())
    if not no_overrides and (run_dir / stages.QUEUE_FILE).exists():
        store = FallbackQueueStore(run_dir / stages.QUEUE_FILE)
        rows = merge_human_overrides(rows, store.items("resolved"))
    table = aggregate_bias_table(rows, judge=judge_name or config.judges.primary)
    click.echo(table.format_table())
    click.echo(f"(sentinel rows excluded from means: {table.sentinel_count})")
    if out_path:
        Path(out_path).write_text(json.dumps(table.to_record(), indent=2) + "\n", "utf-8")


@main.command()
@click.option("--runs-root", default="runs", type=click.Path())
@click.option("--run-id", default="run")
@click.option("--queue", "queue_path", type=click.Path(), default=None, help="explicit queue file path")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--static", "static_dir", type=click.Path(), default=None, help="serve a built frontend from this directory")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(runs_root: str, run_id: str, queue_path: str | None, host: str, port: int, static_dir: str | None, config_path: str | None) -> None:
    """Serve the human review API (and optionally the review UI)."""
    config = _load_cfg(config_path)
    run_dir = Path(runs_root) / run_id
    path = Path(queue_path) if queue_path else run_dir / stages.QUEUE_FILE
    verdict_log = run_dir / stages.JUDGE_LOG
    click.echo(f"serving review queue {path} on http://{host}:{port}", err=True)
    serve_review(
        path,
        host=host,
        port=port,
        weights=config.weights,
        token=config.review_token,
        static_dir=static_dir,
        verdict_log=verdict_log if verdict_log.exists() else None,
    )


if __name__ == "__main__":
    sys.exit(main())
