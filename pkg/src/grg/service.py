"""HTTP gateway: the query/provenance API the console consumes.

Handlers read an immutable store snapshot loaded at startup; rebuilding
stores requires a restart or POST /v1/reload.  All errors use the uniform
{"error": {"code", "message"}} envelope.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import evalbench
from .config import EngineConfig
from .errors import (
    AdapterError,
    ConfigError,
    ContractError,
    DataError,
    GrgError,
    StoreStateError,
)
from .kgraph import graph_to_json, neighborhood
from .stores import EngineSnapshot, answer_query, context_to_wire, load_snapshot

logger = logging.getLogger(__name__)

STATUS_BY_ERROR = [
    (StoreStateError, 409, "stores_not_built"),
    (AdapterError, 503, "adapter_unavailable"),
    (DataError, 400, "bad_request"),
    (ContractError, 400, "bad_request"),
    (ConfigError, 400, "bad_request"),
]


def _envelope(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


class QueryBody(BaseModel):
    text: str = ""
    image_ids: list[str] = []
    mode: str | None = None


class EvalBody(BaseModel):
    benchmark_path: str
    mode: str = "grg"


def build_app(config: EngineConfig) -> FastAPI:
    app = FastAPI(title="grg gateway", version="1.0")
    app.state.config = config
    app.state.snapshot = None
    app.state.load_error = None

    def try_load() -> None:
        try:
            app.state.snapshot = load_snapshot(config, require=("index", "chunks", "graph"))
            app.state.load_error = None
        except GrgError as exc:
            app.state.snapshot = None
            app.state.load_error = str(exc)
            logger.warning("stores unavailable: %s", exc)

    try_load()

    def snapshot_or_raise() -> EngineSnapshot:
        if app.state.snapshot is None:
            raise StoreStateError(app.state.load_error or "stores not built")
        return app.state.snapshot

    @app.exception_handler(GrgError)
    async def grg_error_handler(_: Request, exc: GrgError):
        for klass, status, code in STATUS_BY_ERROR:
            if isinstance(exc, klass):
                return _envelope(code, str(exc), status)
        return _envelope("internal", str(exc), 500)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        return _envelope("bad_request", str(exc), 400)

    @app.get("/v1/health")
    def health():
        snapshot = snapshot_or_raise()
        return {"status": "ok", "stores": snapshot.layout.versions()}

    @app.post("/v1/query")
    def query(body: QueryBody):
        snapshot = snapshot_or_raise()
        mode = body.mode or snapshot.config.default_mode
        if mode not in ("base", "rag", "grg"):
            raise ContractError(f"unknown mode {mode!r}")
        result = answer_query(snapshot, text=body.text, image_ids=body.image_ids, mode=mode)
        return {
            "answer": result.answer,
            "context": context_to_wire(result, snapshot.chunks),
            "diagnostics": result.diagnostics,
        }

    @app.get("/v1/graph/entity/{entity_id}")
    def graph_entity(entity_id: str, depth: int = 1):
        snapshot = snapshot_or_raise()
        if depth not in (1, 2):
            raise ContractError("depth must be 1 or 2")
        if snapshot.graph is None or entity_id not in snapshot.graph.entities:
            return _envelope("not_found", f"unknown entity id {entity_id!r}", 404)
        subgraph, _ = neighborhood(snapshot.graph, [entity_id], depth)
        payload = graph_to_json(subgraph)
        payload["center"] = entity_id
        payload["depth"] = depth
        return payload

    @app.get("/v1/chunks/{chunk_id}")
    def chunk(chunk_id: str):
        snapshot = snapshot_or_raise()
        found = snapshot.chunks.get(chunk_id)
        if found is None:
            return _envelope("not_found", f"unknown chunk id {chunk_id!r}", 404)
        doc = snapshot.docs.get(found.doc_id)
        return {
            "chunk_id": found.chunk_id,
            "doc_id": found.doc_id,
            "span": list(found.span),
            "text": found.text,
            "doc": {
                "title": doc.title if doc else "",
                "source_kind": doc.source_kind if doc else "",
                "meta": doc.meta if doc else {},
            },
        }

    @app.post("/v1/eval")
    def run_eval(body: EvalBody):
        snapshot = snapshot_or_raise()
        if body.mode not in ("base", "rag", "grg"):
            raise ContractError(f"unknown mode {body.mode!r}")
        questions = evalbench.load_benchmark(body.benchmark_path)

        def answer_fn(query_text: str) -> tuple[str, int]:
            result = answer_query(snapshot, text=query_text, mode=body.mode)
            return result.answer, result.context.total_chars

        report = evalbench.run_eval(questions, answer_fn, body.mode)
        out_path = snapshot.layout.path("reports") / f"eval_{body.mode}.json"
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(
            json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        return report.to_json()

    @app.post("/v1/reload")
    def reload():
        try_load()
        if app.state.snapshot is None:
            raise StoreStateError(app.state.load_error or "stores not built")
        return {"status": "reloaded", "stores": app.state.snapshot.layout.versions()}

    return app


def build_app_from_config_path(path: str | Path) -> FastAPI:
    from .config import load_config

    return build_app(load_config(path))
