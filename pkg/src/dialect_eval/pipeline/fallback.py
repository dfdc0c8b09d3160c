"""Fallback queue: low-confidence verdicts awaiting human override.

Stored as newline-delimited JSON. Reads are lock-free snapshots; every
mutation rewrites the file atomically (temp file + rename) under a single
writer lock, so a crash can never leave a half-written queue.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import time
from pathlib import Path

from ..judging import BiasVerdict, RubricWeights, apply_script_gate

STATUS_PENDING = "pending"
STATUS_RESOLVED = "resolved"

HUMAN_OVERRIDE_CONFIDENCE = 5  # human judgments are authoritative


class QueueError(Exception):
    pass


class UnknownVerdictRef(QueueError):
    """An override references a verdict that is not in the queue or log."""


def _item_sort_key(item: dict) -> str:
    return item["verdict_ref"]


class FallbackQueueStore:
    """In-memory view of the queue file with atomic persistence."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._items: dict[str, dict] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        item = json.loads(line)
                        self._items[item["verdict_ref"]] = item

    def items(self, status: str = "all") -> list[dict]:
        snapshot = sorted(self._items.values(), key=_item_sort_key)
        if status in ("all", "", None):
            return snapshot
        return [item for item in snapshot if item["status"] == status]

    def get(self, verdict_ref: str) -> dict | None:
        return self._items.get(verdict_ref)

    def counts(self) -> dict[str, int]:
        items = self._items.values()
        pending = sum(1 for item in items if item["status"] == STATUS_PENDING)
        return {"pending": pending, "resolved": len(self._items) - pending, "total": len(self._items)}

    def _write_locked(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=self.path.parent, prefix=".queue-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for item in sorted(self._items.values(), key=_item_sort_key):
                    fh.write(json.dumps(item, ensure_ascii=False, sort_keys=True) + "\n")
            os.replace(tmp_name, self.path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def rebuild_from(self, items: list[dict]) -> None:
        """Replace the queue with ``items``, keeping existing resolutions.

        Items whose verdict_ref is not in the new set are dropped; refs that
        were already resolved keep their resolved record untouched.
        """
        with self._lock:
            new_items: dict[str, dict] = {}
            for item in items:
                ref = item["verdict_ref"]
                existing = self._items.get(ref)
                if existing is not None and existing["status"] == STATUS_RESOLVED:
                    new_items[ref] = existing
                else:
                    fresh = dict(item)
                    fresh["status"] = STATUS_PENDING
                    fresh.setdefault("human_override", None)
                    new_items[ref] = fresh
            self._items = new_items
            self._write_locked()

    def upsert_pending(self, item: dict) -> None:
        """Add a pending item; an existing resolution for the ref is kept."""
        with self._lock:
            existing = self._items.get(item["verdict_ref"])
            if existing is not None and existing["status"] == STATUS_RESOLVED:
                return
            item = dict(item)
            item["status"] = STATUS_PENDING
            item.setdefault("human_override", None)
            self._items[item["verdict_ref"]] = item
            self._write_locked()

    def resolve(
        self,
        verdict_ref: str,
        likert: tuple[int, int, int, int, int],
        script_valid: bool,
        note: str,
        weights: RubricWeights,
        viewed_machine_reasoning: bool = False,
    ) -> tuple[dict, bool]:
        """Record a human override; returns (item, was_already_resolved).

        Last write wins on an already-resolved item, but the flag lets the
        API surface a conflict to the submitting annotator.
        """
        with self._lock:
            item = self._items.get(verdict_ref)
            if item is None:
                raise UnknownVerdictRef(f"no queue item for verdict {verdict_ref!r}")
            was_resolved = item["status"] == STATUS_RESOLVED
            gated = apply_script_gate(
                BiasVerdict(
                    reasoning=note or "human override",
                    likert=likert,
                    script_valid=script_valid,
                    confidence=HUMAN_OVERRIDE_CONFIDENCE,
                    final_score=0.0,
                ),
                weights,
            )
            item["human_override"] = {
                "likert": list(gated.likert),
                "script_valid": gated.script_valid,
                "confidence": gated.confidence,
                "final_score": gated.final_score,
                "note": note,
            }
            item["status"] = STATUS_RESOLVED
            item["audit"] = {
                **item.get("audit", {}),
                "resolved_ts": time.time(),
                "viewed_machine_reasoning": viewed_machine_reasoning,
            }
            self._write_locked()
            return dict(item), was_resolved
