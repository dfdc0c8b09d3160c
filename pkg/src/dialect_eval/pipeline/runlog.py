"""Append-only newline-delimited JSON run logs with per-row content hashes.

Rows are never rewritten; a re-attempted item appends a fresh row and the
effective view keeps the last row per key. That makes runs crash-safe and
resumable: completed keys are skipped, failed (sentinel) keys are retried.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"


class RunLogError(Exception):
    pass


def row_content_hash(row: dict) -> str:
    """Content hash over everything except the hash itself and timestamps."""
    content = {k: v for k, v in row.items() if k not in ("row_hash", "ts")}
    blob = json.dumps(content, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def key_str(key: dict) -> str:
    return json.dumps(key, sort_keys=True, ensure_ascii=False)


class RunLog:
    """Single-writer append log for one (run, stage)."""

    def __init__(self, path: str | Path, run_id: str, stage: str, config_hash: str) -> None:
        self.path = Path(path)
        self.run_id = run_id
        self.stage = stage
        self.config_hash = config_hash
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, key: dict, payload: dict, status: str = STATUS_OK, error: str = "") -> dict:
        row = {
            "run_id": self.run_id,
            "stage": self.stage,
            "key": key,
            "status": status,
            "payload": payload,
            "error": error,
            "config_hash": self.config_hash,
        }
        row["row_hash"] = row_content_hash(row)
        row["ts"] = time.time()
        line = json.dumps(row, ensure_ascii=False, sort_keys=True)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        return row


def load_rows(path: str | Path) -> list[dict]:
    """Read a log file; a truncated final line (crash artifact) is dropped."""
    path = Path(path)
    if not path.exists():
        return []
    rows: list[dict] = []
    with path.open(encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            rows.append(json.loads(stripped))
        except json.JSONDecodeError:
            if lineno == len(lines):
                logger.warning("dropping truncated final row in %s", path)
                continue
            raise RunLogError(f"{path}: malformed row at line {lineno}")
    return rows


def effective_rows(rows: Iterable[dict]) -> dict[str, dict]:
    """Last row per key wins; retried sentinels are superseded."""
    result: dict[str, dict] = {}
    for row in rows:
        result[key_str(row["key"])] = row
    return result


def completed_keys(rows: Iterable[dict]) -> set[str]:
    """Keys whose latest row succeeded; these are skipped on resume."""
    return {
        key
        for key, row in effective_rows(rows).items()
        if row.get("status") == STATUS_OK
    }
