"""Review API for the human fallback queue.

Endpoints: GET /api/queue, GET /api/item/{id}, POST /api/verdict,
GET /api/progress. Reads are concurrent; overrides funnel through the
queue store's single writer and land atomically. Optionally guarded by a
shared bearer token and able to serve a built frontend.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..judging import RubricWeights
from .fallback import FallbackQueueStore, UnknownVerdictRef
from .runlog import STATUS_OK, effective_rows, load_rows

logger = logging.getLogger(__name__)


class BindError(Exception):
    """The review service could not bind its address."""


class OverrideRequest(BaseModel):
    verdict_ref: str
    likert_comprehension: int = Field(ge=0, le=5)
    likert_factual: int = Field(ge=0, le=5)
    likert_completeness: int = Field(ge=0, le=5)
    likert_clarity: int = Field(ge=0, le=5)
    likert_length: int = Field(ge=0, le=5)
    script_valid: bool = True
    note: str = ""
    viewed_machine_reasoning: bool = False

    def likert_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.likert_comprehension,
            self.likert_factual,
            self.likert_completeness,
            self.likert_clarity,
            self.likert_length,
        )


def create_review_app(
    queue: FallbackQueueStore,
    weights: RubricWeights | None = None,
    token: str = "",
    static_dir: str | Path | None = None,
    verdict_log: str | Path | None = None,
) -> FastAPI:
    weights = weights or RubricWeights()
    app = FastAPI(title="dialect-eval review")

    if token:

        @app.middleware("http")
        async def check_token(request: Request, call_next):
            if request.url.path.startswith("/api/") and request.headers.get(
                "Authorization"
            ) != f"Bearer {token}":
                return JSONResponse({"detail": "invalid or missing token"}, status_code=401)
            return await call_next(request)

    @app.get("/api/queue")
    def get_queue(status: str = "pending") -> dict:
        if status not in ("pending", "resolved", "all"):
            raise HTTPException(status_code=422, detail=f"unknown status filter {status!r}")
        return {"items": queue.items(status), "counts": queue.counts()}

    @app.get("/api/item/{verdict_ref}")
    def get_item(verdict_ref: str) -> dict:
        item = queue.get(verdict_ref)
        if item is None:
            raise HTTPException(status_code=404, detail=f"no item {verdict_ref!r}")
        return item

    @app.post("/api/verdict")
    def post_verdict(body: OverrideRequest) -> dict:
        try:
            item, was_resolved = queue.resolve(
                body.verdict_ref,
                body.likert_tuple(),
                body.script_valid,
                body.note,
                weights,
                viewed_machine_reasoning=body.viewed_machine_reasoning,
            )
        except UnknownVerdictRef as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {
            "verdict_ref": body.verdict_ref,
            "status": item["status"],
            "final_score": item["human_override"]["final_score"],
            "was_resolved": was_resolved,
        }

    @app.get("/api/progress")
    def get_progress() -> dict:
        counts = queue.counts()
        body = {
            **counts,
            "weights": weights.as_dict(),
            "scale_max": weights.scale_max,
        }
        if verdict_log is not None and Path(verdict_log).exists():
            rows = effective_rows(load_rows(verdict_log)).values()
            ok = sum(1 for row in rows if row.get("status") == STATUS_OK)
            body["verdicts"] = {"total": len(rows), "ok": ok, "failed": len(rows) - ok}
        return body

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve_review(
    queue_path: str | Path,
    host: str = "127.0.0.1",
    port: int = 8000,
    weights: RubricWeights | None = None,
    token: str = "",
    static_dir: str | Path | None = None,
    verdict_log: str | Path | None = None,
) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    queue_path = Path(queue_path)
    if not queue_path.exists():
        raise BindError(f"queue file {queue_path} does not exist")
    app = create_review_app(
        FallbackQueueStore(queue_path),
        weights=weights,
        token=token,
        static_dir=static_dir,
        verdict_log=verdict_log,
    )
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
