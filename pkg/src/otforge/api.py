"""HTTP/JSON API over the task store, consumed by the annotation frontend.

Thin handlers: every operation and its rules live in
:class:`~otforge.service.TaskStore`; this module only shapes payloads and maps
service errors onto status codes. Payloads exchange trees in the canonical
JSON node format.
"""

from __future__ import annotations

import json
from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from otforge import treeio
from otforge.service import ServiceError, TaskStore


class CreateTasksRequest(BaseModel):
    trees: list[dict]
    idempotency_key: str | None = None


class QuestionRequest(BaseModel):
    annotator: str
    question: str


class AdaptRequest(BaseModel):
    annotator: str
    edits: list[dict]


class SkipRequest(BaseModel):
    annotator: str
    reason: str


class TokensRequest(BaseModel):
    annotator: str
    corrected_question: str
    assignments: list[dict] = Field(default_factory=list)


def create_app(store: TaskStore) -> FastAPI:
    app = FastAPI(title="otforge annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ServiceError)
    async def service_error(_: Request, exc: ServiceError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"error": str(exc)})

    @app.exception_handler(treeio.ParseError)
    async def parse_error(_: Request, exc: treeio.ParseError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/tasks")
    def create_tasks(body: CreateTasksRequest) -> dict[str, Any]:
        trees = [treeio.parse(json.dumps(obj)) for obj in body.trees]
        ids = store.create_tasks(trees, idempotency_key=body.idempotency_key)
        return {"task_ids": ids}

    @app.get("/tasks/next")
    def next_task(phase: int, annotator: str) -> dict[str, Any]:
        return {"task": store.next_task(annotator, phase)}

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str) -> dict[str, Any]:
        return {"task": store.task_payload(task_id, include_results=True)}

    @app.post("/tasks/{task_id}/question")
    def submit_question(task_id: str, body: QuestionRequest) -> dict[str, Any]:
        return {"task": store.submit_question(task_id, body.annotator, body.question)}

    @app.post("/tasks/{task_id}/adapt")
    def adapt(task_id: str, body: AdaptRequest) -> dict[str, Any]:
        return {"task": store.adapt_constraints(task_id, body.annotator, body.edits)}

    @app.post("/tasks/{task_id}/skip")
    def skip(task_id: str, body: SkipRequest) -> dict[str, Any]:
        return {"task": store.skip_task(task_id, body.annotator, body.reason)}

    @app.get("/tasks/{task_id}/prematch")
    def prematch(task_id: str) -> dict[str, Any]:
        return {"suggestions": store.prematch_tokens(task_id)}

    @app.post("/tasks/{task_id}/tokens")
    def submit_tokens(task_id: str, body: TokensRequest) -> dict[str, Any]:
        return {
            "task": store.submit_token_assignment(
                task_id, body.annotator, body.corrected_question, body.assignments
            )
        }

    @app.get("/export")
    def export(phase: str | None = None) -> dict[str, Any]:
        records, report = store.export(phase=phase)
        return {"records": records, "report": report}

    return app
