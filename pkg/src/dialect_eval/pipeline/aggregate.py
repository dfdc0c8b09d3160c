"""Verdict-log aggregation: human-override merging and the bias table.

Cell means are per (model, dialect); a model's row average is the
unweighted macro-average over its dialect cells. Sentinel (failed) rows
never enter a mean but stay countable so operators can reconstruct their
own denominators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .fallback import STATUS_RESOLVED, UnknownVerdictRef
from .runlog import STATUS_OK


class EmptyLog(Exception):
    """Aggregation over an empty verdict log."""


def merge_human_overrides(
    verdict_rows: Sequence[dict],
    queue_items: Iterable[Mapping],
) -> list[dict]:
    """Replace machine scores with resolved human overrides for aggregation.

    Both verdicts survive: the returned rows carry source="human" and keep
    the machine fields under payload["machine_verdict"]. Unresolved items
    pass through untouched. An override pointing at an unknown verdict_ref
    raises UnknownVerdictRef.
    """
    by_ref = {
        row["payload"].get("verdict_ref"): idx
        for idx, row in enumerate(verdict_rows)
        if row.get("status") == STATUS_OK
    }
    merged = [dict(row) for row in verdict_rows]
    for item in queue_items:
        if item.get("status") != STATUS_RESOLVED:
            continue
        ref = item["verdict_ref"]
        if ref not in by_ref:
            raise UnknownVerdictRef(f"override references unknown verdict {ref!r}")
        row = dict(merged[by_ref[ref]])
        payload = dict(row["payload"])
        override = item["human_override"]
        payload["machine_verdict"] = {
            "likert": payload.get("likert"),
            "script_valid": payload.get("script_valid"),
            "confidence": payload.get("confidence"),
            "final_score": payload.get("final_score"),
        }
        payload["likert"] = list(override["likert"])
        payload["script_valid"] = override["script_valid"]
        payload["confidence"] = override["confidence"]
        payload["final_score"] = override["final_score"]
        payload["source"] = "human"
        row["payload"] = payload
        merged[by_ref[ref]] = row
    for row in merged:
        if row.get("status") == STATUS_OK:
            row["payload"].setdefault("source", "machine")
    return merged


@dataclass(frozen=True)
class CellStat:
    mean: float
    count: int


@dataclass
class BiasTable:
    """Per-(model, dialect) score means with macro-averaged margins."""

    cells: dict[tuple[str, str], CellStat] = field(default_factory=dict)
    row_avg: dict[str, float] = field(default_factory=dict)
    col_avg: dict[str, float] = field(default_factory=dict)
    sentinel_count: int = 0
    total_rows: int = 0

    @property
    def models(self) -> list[str]:
        return sorted({model for model, _ in self.cells})

    @property
    def dialects(self) -> list[str]:
        return sorted({dialect for _, dialect in self.cells})

    def to_record(self) -> dict:
        return {
            "cells": {
                f"{model}|{dialect}": {"mean": stat.mean, "count": stat.count}
                for (model, dialect), stat in sorted(self.cells.items())
            },
            "row_avg": dict(sorted(self.row_avg.items())),
            "col_avg": dict(sorted(self.col_avg.items())),
            "sentinel_count": self.sentinel_count,
            "total_rows": self.total_rows,
        }

    def format_table(self) -> str:
        dialects = self.dialects
        headers = ["model", *dialects, "avg"]
        lines = []
        for model in self.models:
            row = [model]
            for dialect in dialects:
                stat = self.cells.get((model, dialect))
                row.append("-" if stat is None else f"{stat.mean:.2f}")
            row.append(f"{self.row_avg[model]:.2f}")
            lines.append(row)
        col_line = ["dialect avg"]
        for dialect in dialects:
            col_line.append(f"{self.col_avg[dialect]:.2f}" if dialect in self.col_avg else "-")
        col_line.append("")
        lines.append(col_line)
        widths = [max(len(headers[i]), *(len(r[i]) for r in lines)) for i in range(len(headers))]
        out = [
            "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
            "  ".join("-" * w for w in widths),
        ]
        out.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in lines)
        return "\n".join(out)


def aggregate_bias_table(final_rows: Sequence[dict], judge: str | None = None) -> BiasTable:
    """Group verdict rows into the bias table.

    Rows may be filtered to a single judge (the primary, for headline
    tables). Sentinel rows are excluded from means but included in counts.
    """
    relevant = [
        row for row in final_rows if judge is None or row["key"].get("judge") == judge
    ]
    if not relevant:
        raise EmptyLog("no verdict rows to aggregate")
    sums: dict[tuple[str, str], list[float]] = {}
    sentinel = 0
    for row in relevant:
        if row.get("status") != STATUS_OK:
            sentinel += 1
            continue
        key = (row["key"]["model"], row["key"]["dialect"])
        sums.setdefault(key, []).append(float(row["payload"]["final_score"]))
    table = BiasTable(sentinel_count=sentinel, total_rows=len(relevant))
    for key, scores in sums.items():
        table.cells[key] = CellStat(mean=sum(scores) / len(scores), count=len(scores))
    for model in {m for m, _ in table.cells}:
        means = [stat.mean for (m, _), stat in table.cells.items() if m == model]
        table.row_avg[model] = sum(means) / len(means)
    for dialect in {d for _, d in table.cells}:
        means = [stat.mean for (_, d), stat in table.cells.items() if d == dialect]
        table.col_avg[dialect] = sum(means) / len(means)
    return table
